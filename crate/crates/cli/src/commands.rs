//! `build`, `stats` and `verify`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use anyhow::{bail, Context, Result};
use halfsign_core::arith::is_prime_u64;
use halfsign_core::hecke::{
    basis_for_primes, check_commuting, eigenforms, hecke_matrices, load_eigenforms, numeric_eigenvalue_deviation,
    save_eigenforms, EigenConfig, HeckeEigenform,
};
use halfsign_core::linalg::Matrix;
use halfsign_core::modspace::{load_basis, save_basis, HalfIntegralCuspForm};
use halfsign_core::seriesnum::{
    d_partial, kernel_contour_oracle, kernel_grid, m_partial, write_evaluations_csv, EvaluationRow,
    CONTOUR_TOLERANCE,
};
use halfsign_core::shimura::{check_square_multiples, deligne_check, lift_coefficients, ShimuraLiftSeries};
use halfsign_core::signstats::{
    exponent_fit, interval_scan, kernel_weight, mean_square, moment_row, sign_change_report, smoothed_first_moment,
    target_exponents, write_moments_csv, write_sign_counts_csv, write_witnesses_csv, KernelParams, LambdaTable,
};
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Serialize;

use crate::config::JobConfig;
use crate::svg::{line_chart, Series};

fn eigen_config(cfg: &JobConfig) -> EigenConfig {
    EigenConfig { embedding: cfg.embedding.into(), ..EigenConfig::default() }
}

/// Primes `p` whose eigenvalue can be read off an expansion of `precision` coefficients
/// normalized at `t0`.
fn readable_primes(precision: usize, t0: usize) -> Vec<u64> {
    let t0 = t0.max(1) as u64;
    (2..).take_while(|&p: &u64| p * p * (t0 + 1) <= precision as u64).filter(|&p| is_prime_u64(p)).collect()
}

fn load_caches(cfg: &JobConfig) -> Result<(Vec<HalfIntegralCuspForm>, Vec<HeckeEigenform>)> {
    let (bp, ep) = (cfg.basis_cache(), cfg.eigenform_cache());
    if !bp.exists() || !ep.exists() {
        bail!("missing cache for ℓ = {} in {}: run `halfsign build` first", cfg.ell, cfg.cache_dir.display());
    }
    let (file, basis) = load_basis(&bp).with_context(|| format!("loading {}", bp.display()))?;
    if file.ell != cfg.ell {
        bail!("{} holds ℓ = {}, expected {}", bp.display(), file.ell, cfg.ell);
    }
    let forms = load_eigenforms(&ep).with_context(|| format!("loading {}", ep.display()))?;
    if forms.iter().any(|f| f.ell() != cfg.ell) {
        bail!("{} holds forms of the wrong weight", ep.display());
    }
    Ok((basis, forms))
}

/// Basis expanded far enough for `T_{p²}` at every configured prime.
fn basis_for_config(basis: Vec<HalfIntegralCuspForm>, cfg: &JobConfig) -> Result<Vec<HalfIntegralCuspForm>> {
    let pmax = cfg.primes.iter().copied().max().unwrap_or(2) as usize;
    let need = halfsign_core::modspace::safety_precision(cfg.ell) * pmax * pmax;
    if basis.first().is_some_and(|b| b.precision() < need) {
        return Ok(basis.iter().map(|b| b.expanded(need)).collect::<Result<_, _>>()?);
    }
    Ok(basis)
}

pub fn cmd_build(cfg: &JobConfig) -> Result<()> {
    let (bp, ep) = (cfg.basis_cache(), cfg.eigenform_cache());
    if bp.exists() && ep.exists() {
        let (basis, forms) = load_caches(cfg)?;
        let same = forms.iter().all(|f| f.form.precision() == cfg.precision)
            && cfg.primes.iter().all(|p| forms.iter().all(|f| f.eigenvalues.contains_key(p)));
        if same {
            for f in &forms {
                for &p in &cfg.primes {
                    f.verify_eigen_identity(p).with_context(|| format!("cached eigenform fails at p = {p}"))?;
                }
            }
            println!(
                "cache valid: ℓ = {}, dimension {}, {} eigenform(s), precision {} ({})",
                cfg.ell,
                basis.len(),
                forms.len(),
                cfg.precision,
                cfg.cache_dir.display()
            );
            return Ok(());
        }
        println!("cache parameters differ from the configuration; rebuilding");
    }
    fs::create_dir_all(&cfg.cache_dir).with_context(|| format!("creating {}", cfg.cache_dir.display()))?;
    let basis = basis_for_primes(cfg.ell, &cfg.primes)?;
    let matrices = hecke_matrices(&basis, &cfg.primes)?;
    let dec = eigenforms(&basis, &matrices, &eigen_config(cfg))?;
    println!("ℓ = {}: cusp space of dimension {}", cfg.ell, basis.len());
    println!("  characteristic polynomial of {:?}: {}", dec.generator, dec.charpoly.display_in("x"));
    let mut forms = Vec::new();
    for f in &dec.eigenforms {
        let mut g = f.expanded(cfg.precision)?;
        g.extend_eigenvalues(&readable_primes(cfg.precision, g.t0))?;
        println!(
            "  eigenform over {} (t₀ = {}): {} eigenvalues{}",
            g.field().minpoly().display_in("x"),
            g.t0,
            g.eigenvalues.len(),
            if g.non_eigen_primes.is_empty() { String::new() } else { format!(", not an eigenform at {:?}", g.non_eigen_primes) }
        );
        forms.push(g);
    }
    for s in &dec.skipped {
        println!("  skipped factor {} (multiplicity {}): {:?}", s.factor.display_in("x"), s.multiplicity, s.reason);
    }
    save_basis(&bp, cfg.ell, &basis)?;
    save_eigenforms(&ep, &forms)?;
    println!("wrote {} and {}", bp.display(), ep.display());
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

#[derive(Serialize)]
struct MeanSquareRow {
    x: u64,
    squarefree_sum: f64,
    full_sum: f64,
    r_estimate: f64,
}

#[derive(Serialize)]
struct FitRow {
    statistic: &'static str,
    slope: f64,
    intercept: f64,
    residual: f64,
    target: f64,
}

#[derive(Serialize)]
struct PairRow {
    plus: u64,
    minus: u64,
}

fn write_csv<R: Serialize>(path: &Path, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Largest `L` such that every prime `p ≤ L` has a stored eigenvalue, capped at `cap`.
fn lift_limit(f: &HeckeEigenform, cap: u64) -> u64 {
    let mut l = 1;
    while l < cap {
        let next = l + 1;
        if is_prime_u64(next) && !f.eigenvalues.contains_key(&next) {
            break;
        }
        l = next;
    }
    l
}

pub fn cmd_stats(cfg: &JobConfig) -> Result<()> {
    let (_, forms) = load_caches(cfg)?;
    let mut xs = cfg.x.clone();
    xs.sort_unstable();
    xs.dedup();
    let xmax = xs.last().copied().unwrap_or(0);
    let (t_exp, c_exp) = target_exponents(cfg.alpha);
    println!("target exponents at α = {:.4}: T^± ≥ x^{:.4}, C ≥ x^{:.4}", cfg.alpha, t_exp, c_exp);
    for (k, f) in forms.iter().enumerate() {
        let dir = cfg.out_dir.join(format!("l{}", cfg.ell)).join(format!("f{k}"));
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let limit = (cfg.precision as u64 - 1).max(xmax);
        let form = if (f.form.precision() as u64) <= limit { f.expanded(limit as usize + 1)? } else { f.clone() };
        let table = LambdaTable::from_eigenform(&form, limit)?;

        let report = sign_change_report(&table, &xs, cfg.alpha)?;
        write_sign_counts_csv(create(&dir.join("sign_counts.csv"))?, &report.thresholds)?;
        let pairs: Vec<PairRow> = report.pairs.iter().map(|p| PairRow { plus: p.plus, minus: p.minus }).collect();
        write_csv(&dir.join("sign_pairs.csv"), &["plus", "minus"], &pairs)?;

        let b = (1.0 + 1.0 / cfg.bundle as f64).powi(2);
        let scan_x = (xmax as f64 / b).floor();
        let witnesses = if xmax > 0 {
            match interval_scan(&table, scan_x, cfg.eta, cfg.bundle, cfg.alpha) {
                Ok(s) => {
                    println!(
                        "f{k}: interval scan X = {scan_x}, η = {}, J = {}, witnesses = {}{}",
                        cfg.eta,
                        s.j_count,
                        s.witnesses.len(),
                        if s.eta_in_proof_range { "" } else { " (η ≤ 3/4 + α)" }
                    );
                    s.witnesses
                }
                Err(e) => {
                    println!("f{k}: interval scan skipped: {e}");
                    Vec::new()
                }
            }
        } else {
            Vec::new()
        };
        write_witnesses_csv(create(&dir.join("witnesses.csv"))?, &witnesses)?;

        let mut moments = Vec::new();
        let mut squares = Vec::new();
        let mut first = Vec::new();
        for &x in &xs {
            let ms = mean_square(&table, x)?;
            squares.push(MeanSquareRow { x, squarefree_sum: ms.squarefree_sum, full_sum: ms.full_sum, r_estimate: ms.r_estimate });
            first.push((x as f64, smoothed_first_moment(&table, x)?));
            if x >= 2 {
                let p = KernelParams::new(x as f64, cfg.eta, cfg.bundle)?;
                if p.reach() <= table.limit() {
                    moments.push(moment_row(&table, &p)?);
                }
            }
        }
        write_moments_csv(create(&dir.join("moments.csv"))?, &moments)?;
        write_csv(&dir.join("mean_square.csv"), &["x", "squarefree_sum", "full_sum", "r_estimate"], &squares)?;

        let (tp, tm) = report.fit_points();
        let cp: Vec<(f64, f64)> = report.thresholds.iter().map(|r| (r.x as f64, r.c as f64)).collect();
        let fp: Vec<(f64, f64)> = first.iter().map(|&(x, v)| (x, v.abs())).collect();
        let mut fits = Vec::new();
        for (name, pts, target) in [("T_plus", &tp, t_exp), ("T_minus", &tm, t_exp), ("C", &cp, c_exp), ("first_moment", &fp, 0.75)] {
            if let Ok(fit) = exponent_fit(pts) {
                println!("f{k}: {name} grows like x^{:.4} (target {target:.4})", fit.slope);
                fits.push(FitRow { statistic: name, slope: fit.slope, intercept: fit.intercept, residual: fit.residual, target });
            }
        }
        write_csv(&dir.join("exponent_fit.csv"), &["statistic", "slope", "intercept", "residual", "target"], &fits)?;

        let mut d_rows = Vec::new();
        let mut m_rows = Vec::new();
        for s in [Complex64::new(1.5, 0.0), Complex64::new(2.0, 0.0), Complex64::new(2.0, 5.0)] {
            for &x in xs.iter().filter(|&&x| x >= 1) {
                d_rows.push(EvaluationRow::from(&d_partial(&table, s, x)?));
                m_rows.push(EvaluationRow::from(&m_partial(&table, s, x)?));
            }
        }
        write_evaluations_csv(create(&dir.join("dirichlet_d.csv"))?, &d_rows)?;
        write_evaluations_csv(create(&dir.join("dirichlet_m.csv"))?, &m_rows)?;

        let l = lift_limit(f, 1000);
        match lift_coefficients(f, l) {
            Ok(lift) => lift.write_csv(create(&dir.join("shimura_lift.csv"))?)?,
            Err(e) => println!("f{k}: lift not written: {e}"),
        }

        let svgs = [
            (
                "sign_counts.svg",
                line_chart(
                    "squarefree sign counts",
                    "x",
                    "count",
                    &[
                        Series { name: "T+", points: tp.clone() },
                        Series { name: "T-", points: tm.clone() },
                        Series { name: "C", points: cp.clone() },
                    ],
                    true,
                ),
            ),
            (
                "mean_square.svg",
                line_chart(
                    "mean square / x",
                    "x",
                    "value",
                    &[
                        Series { name: "squarefree", points: squares.iter().map(|r| (r.x as f64, r.squarefree_sum / r.x as f64)).collect() },
                        Series { name: "all n", points: squares.iter().map(|r| (r.x as f64, r.r_estimate)).collect() },
                    ],
                    true,
                ),
            ),
            ("first_moment.svg", line_chart("smoothed first moment", "x", "value", &[Series { name: "M1", points: first.clone() }], true)),
            (
                "moments.svg",
                line_chart(
                    "short-interval moments",
                    "x",
                    "value",
                    &[
                        Series { name: "moment1", points: moments.iter().map(|r| (r.x, r.moment1)).collect() },
                        Series { name: "moment2", points: moments.iter().map(|r| (r.x, r.moment2)).collect() },
                    ],
                    true,
                ),
            ),
        ];
        for (name, body) in svgs {
            fs::write(dir.join(name), body).with_context(|| format!("writing {name}"))?;
        }
        println!("f{k}: reports in {}", dir.display());
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub module: &'static str,
    pub invariant: &'static str,
    pub outcome: Outcome,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Skip => "SKIP",
        };
        write!(f, "{tag} {}::{}: {}", self.module, self.invariant, self.detail)
    }
}

fn check(module: &'static str, invariant: &'static str, ok: bool, detail: String) -> Check {
    Check { module, invariant, outcome: if ok { Outcome::Pass } else { Outcome::Fail }, detail }
}

fn lift_checks(f: &HeckeEigenform, k: usize, uks_bound: u64, out: &mut Vec<Check>) {
    let l = lift_limit(f, 1000);
    let lift: ShimuraLiftSeries = match lift_coefficients(f, l) {
        Ok(lift) => lift,
        Err(e) => {
            for inv in ["square_multiples", "multiplicativity", "deligne"] {
                out.push(Check { module: "shimura", invariant: inv, outcome: Outcome::Skip, detail: format!("f{k}: {e}") });
            }
            return;
        }
    };
    let bound = uks_bound.min(f.form.precision() as u64 - 1).min(l * l);
    match check_square_multiples(f, &lift, bound) {
        Ok((n, bad)) => out.push(check(
            "shimura",
            "square_multiples",
            bad.is_empty(),
            if bad.is_empty() {
                format!("f{k}: {n} pairs with tn² ≤ {bound} agree exactly")
            } else {
                format!("f{k}: {} of {n} pairs disagree, first (t, n) = ({}, {})", bad.len(), bad[0].t, bad[0].n)
            },
        )),
        Err(e) => out.push(check("shimura", "square_multiples", false, format!("f{k}: {e}"))),
    }
    let mut bad = None;
    let mut pairs = 0;
    'outer: for m in 2..=l {
        for n in 2..=l / m {
            if num_integer::gcd(m, n) != 1 {
                continue;
            }
            pairs += 1;
            let (a, b, c) = (lift.coeff(m), lift.coeff(n), lift.coeff(m * n));
            if let (Ok(a), Ok(b), Ok(c)) = (a, b, c) {
                if a.mul(b) != *c {
                    bad = Some((m, n));
                    break 'outer;
                }
            }
        }
    }
    out.push(check(
        "shimura",
        "multiplicativity",
        bad.is_none(),
        match bad {
            None => format!("f{k}: {pairs} coprime pairs with mn ≤ {l}"),
            Some((m, n)) => format!("f{k}: Ŝh({}) ≠ Ŝh({m})Ŝh({n})", m * n),
        },
    ));
    match deligne_check(&lift, l) {
        Ok(r) => out.push(check(
            "shimura",
            "deligne",
            true,
            format!("f{k}: max |ω_p|/2p^(ℓ−1/2) = {:.6} at p = {}, sup |Ŝh(d)|/(d^(ℓ−1/2)τ(d)) = {:.4} at d = {}", r.worst_prime_ratio, r.worst_prime, r.sup_ratio, r.argmax),
        )),
        Err(e) => out.push(check("shimura", "deligne", false, format!("f{k}: {e}"))),
    }
}

/// Run the invariant suite; the returned checks are in a fixed order.
pub fn run_checks(cfg: &JobConfig) -> Result<Vec<Check>> {
    let (basis, forms) = load_caches(cfg)?;
    let mut out = Vec::new();
    let basis = basis_for_config(basis, cfg)?;
    let matrices: BTreeMap<u64, Matrix<BigRational>> = match hecke_matrices(&basis, &cfg.primes) {
        Ok(m) => m,
        Err(e) => {
            out.push(check("hecke", "commutativity", false, e.to_string()));
            BTreeMap::new()
        }
    };
    if !matrices.is_empty() {
        let r = check_commuting(&matrices);
        out.push(check("hecke", "commutativity", r.is_ok(), match r {
            Ok(()) => format!("T_{{p²}} commute for p ∈ {:?}", cfg.primes),
            Err(e) => e.to_string(),
        }));
    }
    for (k, f) in forms.iter().enumerate() {
        let mut failures = Vec::new();
        for &p in &cfg.primes {
            if let Err(e) = f.verify_eigen_identity(p) {
                failures.push(e.to_string());
            }
        }
        out.push(check(
            "hecke",
            "eigen_identity",
            failures.is_empty(),
            if failures.is_empty() { format!("f{k}: T_{{p²}} f = ω_p f for p ∈ {:?}", cfg.primes) } else { format!("f{k}: {}", failures.join("; ")) },
        ));
        if !matrices.is_empty() {
            let dev = numeric_eigenvalue_deviation(f, &matrices);
            out.push(check("hecke", "embedding_consistency", dev <= 1e-8, format!("f{k}: relative deviation {dev:.2e}")));
        }
        lift_checks(f, k, cfg.uks_bound, &mut out);
    }
    let mut worst: f64 = 0.0;
    let mut failure = None;
    for delta in [0.01, 0.001] {
        for xi in kernel_grid(delta) {
            match kernel_contour_oracle(delta, xi, 2.0, 1e4) {
                Ok(v) => worst = worst.max((v.value.re - kernel_weight(delta, xi)).abs()),
                Err(e) => failure = Some(e.to_string()),
            }
        }
    }
    let ok = failure.is_none() && worst <= CONTOUR_TOLERANCE;
    out.push(check("seriesnum", "kernel_identity", ok, failure.unwrap_or_else(|| format!("max deviation {worst:.2e}"))));
    Ok(out)
}

/// Print every check; `Ok(true)` when none failed.
pub fn cmd_verify(cfg: &JobConfig) -> Result<bool> {
    let checks = run_checks(cfg)?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| c.outcome == Outcome::Fail).count();
    println!("{} checks, {failed} failed", checks.len());
    Ok(failed == 0)
}
