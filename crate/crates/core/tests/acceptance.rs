//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use halfsign_core::arith::is_prime_u64;
use halfsign_core::hecke::{
    basis_for_primes, check_commuting, deligne_bound, eigenforms, hecke_apply_series, hecke_matrices, output_len,
    EigenConfig, HeckeEigenform,
};
use halfsign_core::linalg::{mat_mul, Matrix};
use halfsign_core::modspace::{cusp_space_basis, expected_dimension, HalfIntegralCuspForm};
use halfsign_core::qseries::{f2_expansion, theta_expansion};
use halfsign_core::seriesnum::{kernel_contour_oracle, kernel_grid};
use halfsign_core::shimura::{check_square_multiples, lift_coefficients};
use halfsign_core::signstats::{
    count_signs, exponent_fit, interval_scan, mean_square, sign_change_report, smoothed_first_moment, LambdaTable,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

type Outcome = Result<String, String>;

const HECKE_PRIMES: [u64; 3] = [3, 5, 7];

fn primes_upto(n: u64) -> Vec<u64> {
    (2..=n).filter(|&p| is_prime_u64(p)).collect()
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn decompose(ell: u32) -> (Vec<HalfIntegralCuspForm>, BTreeMap<u64, Matrix<BigRational>>, Vec<HeckeEigenform>) {
    let basis = basis_for_primes(ell, &HECKE_PRIMES).expect("basis");
    let m = hecke_matrices(&basis, &HECKE_PRIMES).expect("matrices");
    let dec = eigenforms(&basis, &m, &EigenConfig::default()).expect("eigenforms");
    (basis, m, dec.eigenforms)
}

/// The weight-4 eigenform expanded to `n` coefficients with ω_p for every readable prime.
fn weight_four(n: usize) -> HeckeEigenform {
    let (_, _, forms) = decompose(4);
    let mut f = forms.into_iter().next().expect("one eigenform");
    f.form = f.form.expanded(n).expect("expansion");
    let t0 = f.t0.max(1) as u64;
    let readable: Vec<u64> = primes_upto(((n as u64) / (t0 + 1)).isqrt());
    f.extend_eigenvalues(&readable).expect("eigenvalues");
    f
}

fn criterion_1() -> Outcome {
    let n = 10_001;
    let theta = theta_expansion(n);
    let f = f2_expansion(n);
    let mut sigma = vec![0i64; n];
    for d in (1..n).step_by(2) {
        for m in (d..n).step_by(2 * d) {
            sigma[m] += d as i64;
        }
    }
    for k in 0..n {
        let r = k.isqrt();
        let sq = if k == 0 { 1 } else if r * r == k { 2 } else { 0 };
        if theta.coeff(k) != int(sq) {
            return Err(format!("θ differs at q^{k}"));
        }
        if f.coeff(k) != int(sigma[k]) {
            return Err(format!("F differs at q^{k}"));
        }
    }
    Ok(format!("θ and F agree with brute force for n ≤ {}", n - 1))
}

fn stable_under(basis: &[HalfIntegralCuspForm], m: &Matrix<BigRational>, p: u64) -> bool {
    let ell = basis[0].ell();
    let len = output_len(basis[0].precision(), p);
    basis.iter().enumerate().all(|(i, b)| {
        let image = hecke_apply_series(&b.components()[0], p, ell).expect("hecke image");
        (0..len).all(|k| {
            let combo = basis
                .iter()
                .enumerate()
                .fold(BigRational::zero(), |acc, (r, br)| acc + &m[r][i] * br.coeff_rational(k).unwrap());
            image.coeff(k) == combo
        })
    })
}

fn criterion_2() -> Outcome {
    let mut dims = Vec::new();
    for ell in 4..=10 {
        let (basis, m, _) = decompose(ell);
        if basis.len() != expected_dimension(ell) {
            return Err(format!("ℓ = {ell}: dimension {} ≠ {}", basis.len(), expected_dimension(ell)));
        }
        for (&p, mp) in &m {
            if !stable_under(&basis, mp, p) {
                return Err(format!("ℓ = {ell}: T_{{{p}²}} image leaves the span"));
            }
        }
        let n = basis[0].precision();
        let doubled = cusp_space_basis(ell, 2 * n).map_err(|e| format!("ℓ = {ell} at precision {}: {e}", 2 * n))?;
        if doubled.len() != basis.len() {
            return Err(format!("ℓ = {ell}: dimension {} at N = {n}, {} at 2N", basis.len(), doubled.len()));
        }
        let m2 = hecke_matrices(&doubled, &HECKE_PRIMES).map_err(|e| e.to_string())?;
        if m2 != m {
            return Err(format!("ℓ = {ell}: Hecke matrices change under precision doubling"));
        }
        dims.push(format!("{ell}:{}", basis.len()));
    }
    Ok(format!("T₉, T₂₅, T₄₉ stable, dimensions {}", dims.join(" ")))
}

fn criterion_3() -> Outcome {
    for ell in 4..=10 {
        let (_, m, _) = decompose(ell);
        check_commuting(&m).map_err(|e| format!("ℓ = {ell}: {e}"))?;
        for &p in &HECKE_PRIMES {
            for &q in &HECKE_PRIMES {
                if mat_mul(&m[&p], &m[&q]) != mat_mul(&m[&q], &m[&p]) {
                    return Err(format!("ℓ = {ell}: T_{{{p}²}} and T_{{{q}²}} do not commute"));
                }
            }
        }
    }
    Ok("T₉, T₂₅, T₄₉ commute exactly for ℓ = 4..10".into())
}

fn criterion_4(f: &HeckeEigenform) -> Outcome {
    let bound = 10_000;
    let lift = lift_coefficients(f, 100).map_err(|e| e.to_string())?;
    let (checked, bad) = check_square_multiples(f, &lift, bound).map_err(|e| e.to_string())?;
    if !bad.is_empty() {
        return Err(format!("{} mismatches, first {:?}", bad.len(), bad[0]));
    }
    Ok(format!("{checked} pairs (t, n) with tn² ≤ {bound} agree exactly"))
}

fn criterion_5(f: &HeckeEigenform) -> Outcome {
    // q∏(1−qⁿ)⁸(1−q²ⁿ)⁸ to q⁵
    let len = 6;
    let mut c = vec![0i64; len];
    c[1] = 1;
    for n in 1..len {
        for step in [n, 2 * n] {
            for _ in 0..8 {
                if step < len {
                    for k in (step..len).rev() {
                        c[k] -= c[k - step];
                    }
                }
            }
        }
    }
    for p in [3u64, 5] {
        let w = f.eigenvalues.get(&p).and_then(|v| v.as_rational()).ok_or(format!("ω_{p} missing"))?;
        if w != int(c[p as usize]) {
            return Err(format!("ω_{p} = {w}, newform coefficient {}", c[p as usize]));
        }
    }
    Ok(format!("ω₃ = {}, ω₅ = {} match the weight-8 level-2 newform", c[3], c[5]))
}

fn criterion_6() -> Outcome {
    let primes = primes_upto(100);
    let mut worst = (0.0f64, 0u32, 0u64);
    let mut no_two = 0;
    for ell in 4..=10 {
        let (_, _, forms) = decompose(ell);
        for mut f in forms {
            let t0 = f.t0.max(1);
            f.form = f.form.expanded((t0 + 1) * 100 * 100 + 1).map_err(|e| e.to_string())?;
            f.extend_eigenvalues(&primes).map_err(|e| format!("ℓ = {ell}: {e}"))?;
            for &p in &primes {
                let Some(w) = f.eigenvalues.get(&p) else {
                    if p == 2 {
                        no_two += 1;
                        continue;
                    }
                    return Err(format!("ℓ = {ell}: ω_{p} missing"));
                };
                let ratio = w.to_f64().abs() / deligne_bound(p, ell);
                if ratio > worst.0 {
                    worst = (ratio, ell, p);
                }
            }
        }
    }
    let detail = format!(
        "max |ω_p|/2p^((2ℓ−1)/2) = {:.6} (ℓ = {}, p = {}); {no_two} oldform(s) without a U₄ eigenvalue",
        worst.0, worst.1, worst.2
    );
    if worst.0 <= 1.0 + 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn closed_form_kernel(delta: f64, xi: f64) -> f64 {
    let l = xi.ln();
    if (-2.0 * delta..=0.0).contains(&l) {
        (2.0 * delta + l).min(-l)
    } else {
        0.0
    }
}

fn criterion_7() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for delta in [0.01, 0.001] {
        for xi in kernel_grid(delta) {
            let v = kernel_contour_oracle(delta, xi, 2.0, 1e4).map_err(|e| format!("δ = {delta}, ξ = {xi}: {e}"))?;
            worst = worst.max((v.value.re - closed_form_kernel(delta, xi)).abs());
            points += 1;
        }
    }
    let detail = format!("{points} points, max deviation {worst:.2e}");
    if worst <= 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_8(table: &LambdaTable) -> Outcome {
    let r5 = mean_square(table, 50_000).map_err(|e| e.to_string())?.r_estimate;
    let r10 = mean_square(table, 100_000).map_err(|e| e.to_string())?.r_estimate;
    let gap = (r5 - r10).abs() / r10.abs();
    let flat: Vec<f64> = [25_000u64, 50_000, 100_000]
        .iter()
        .map(|&x| mean_square(table, x).map(|m| m.squarefree_sum / x as f64))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let (lo, hi) = flat.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    let detail = format!(
        "r(5e4) = {r5:.4}, r(1e5) = {r10:.4} (gap {:.2}%); Σ♭λ²/x in [{lo:.4}, {hi:.4}], C/c = {:.3}",
        100.0 * gap,
        hi / lo
    );
    if gap <= 0.10 && lo > 0.0 && hi / lo <= 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_9(table: &LambdaTable) -> Outcome {
    let xs = [1_000u64, 10_000, 100_000];
    let counts: Vec<(u64, u64)> = xs.iter().map(|&x| count_signs(table, x)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let fit = |sel: fn(&(u64, u64)) -> u64| {
        let pts: Vec<(f64, f64)> = xs.iter().zip(&counts).map(|(&x, c)| (x as f64, sel(c) as f64)).collect();
        exponent_fit(&pts).map(|f| f.slope)
    };
    let sp = fit(|c| c.0).map_err(|e| e.to_string())?;
    let sm = fit(|c| c.1).map_err(|e| e.to_string())?;
    let (tp, tm) = counts[2];
    let detail = format!("T⁺(1e5) = {tp}, T⁻(1e5) = {tm}; exponents {sp:.3}, {sm:.3}");
    if tp >= 100 && tm >= 100 && sp > 0.5 && sm > 0.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_10(table: &LambdaTable) -> Outcome {
    let scan = interval_scan(table, 50_000.0, 0.9, 3, 1.0 / 6.0).map_err(|e| e.to_string())?;
    let report = sign_change_report(table, &[1_000, 10_000, 25_000, 50_000, 100_000], 1.0 / 6.0).map_err(|e| e.to_string())?;
    let dominated = report.thresholds.iter().all(|r| r.c <= r.t_plus.min(r.t_minus));
    let detail = format!(
        "{} witness(es) over J = {} blocks; C(1e5) = {}; C ≤ min(T±) at every x: {dominated}",
        scan.witnesses.len(),
        scan.j_count,
        report.c
    );
    if !scan.witnesses.is_empty() && report.c >= 10 && dominated {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_11(table: &LambdaTable) -> Outcome {
    let pts: Vec<(f64, f64)> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&x| smoothed_first_moment(table, x).map(|m| (x as f64, m.abs())))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let fit = exponent_fit(&pts).map_err(|e| e.to_string())?;
    let detail = format!(
        "|M₁| = {:.2}, {:.2}, {:.2}; exponent {:.3}",
        pts[0].1, pts[1].1, pts[2].1, fit.slope
    );
    if fit.slope < 0.9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn report(failed: &mut usize, k: u32, name: &str, limit: Option<Duration>, run: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let out = run();
    let elapsed = start.elapsed();
    let over = limit.is_some_and(|l| elapsed > l);
    let (status, detail) = match (&out, over) {
        (Ok(d), false) => ("PASS", d.clone()),
        (Ok(d), true) => ("FAIL", format!("{d}; exceeded {:?}", limit.unwrap())),
        (Err(d), _) => ("FAIL", d.clone()),
    };
    if status == "FAIL" {
        *failed += 1;
    }
    println!("criterion {k:>2} {status} {name}: {detail} [{:.2}s]", elapsed.as_secs_f64());
}

fn main() -> ExitCode {
    let mut failed = 0;
    let secs = |s| Some(Duration::from_secs(s));
    report(&mut failed, 1, "generator expansions", secs(10), criterion_1);
    report(&mut failed, 2, "Hecke-stable cusp spaces", secs(60), criterion_2);
    report(&mut failed, 3, "Hecke commutativity", None, criterion_3);

    let start = Instant::now();
    let f = weight_four(100_001);
    let table = LambdaTable::from_eigenform(&f, 100_000).expect("λ table");
    let setup = start.elapsed();
    println!("(ℓ = 4 eigenform expanded to 10⁵ in {:.2}s)", setup.as_secs_f64());

    report(&mut failed, 4, "square-multiple coefficients", secs(120), || criterion_4(&f));
    report(&mut failed, 5, "lift against weight-8 newform", None, || criterion_5(&f));
    report(&mut failed, 6, "Deligne bound", None, criterion_6);
    report(&mut failed, 7, "kernel identity", secs(60), criterion_7);
    report(&mut failed, 8, "mean square", Some(Duration::from_secs(600) - setup), || criterion_8(&table));
    report(&mut failed, 9, "sign abundance", None, || criterion_9(&table));
    report(&mut failed, 10, "sign changes", None, || criterion_10(&table));
    report(&mut failed, 11, "smoothed first moment", None, || criterion_11(&table));

    println!("{} criteria, {failed} failed", 11);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
