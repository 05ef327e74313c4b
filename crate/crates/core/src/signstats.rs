//! Sign counts, squarefree sign-change pairs and the moment sums used to detect them.
//!
//! Every statistic runs over a [`LambdaTable`]: normalized coefficients `λ(n)` as floats,
//! exact signs of `ĥ(n)`, and a squarefree mask. Counting uses the exact signs; sums use
//! the floats.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{ArithError, FactorizationCache};
use crate::hecke::HeckeEigenform;
use crate::modspace::lambda_vector;
use crate::numfield::NumFieldError;

pub const DEFAULT_ALPHA: f64 = 1.0 / 6.0;
pub const DEFAULT_ETA: f64 = 0.85;
pub const DEFAULT_BUNDLE: u32 = 3;

#[derive(Debug, Error)]
pub enum SignStatsError {
    #[error("coefficients needed up to {needed}, table holds {have}")]
    PrecisionShortfall { needed: u64, have: u64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("exponent fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("exponent fit needs positive data, got ({x}, {value})")]
    NonPositive { x: f64, value: f64 },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Field(#[from] NumFieldError),
}

/// `λ(n)`, exact signs and squarefree flags for `0 ≤ n ≤ limit` (index 0 unused).
#[derive(Clone, Debug)]
pub struct LambdaTable {
    lambda: Vec<f64>,
    signs: Vec<i8>,
    squarefree: Vec<bool>,
}

impl LambdaTable {
    /// Table of `f` up to `limit`; the expansion must already reach `limit`.
    pub fn from_eigenform(f: &HeckeEigenform, limit: u64) -> Result<Self, SignStatsError> {
        let have = f.form.precision() as u64;
        if have <= limit {
            return Err(SignStatsError::PrecisionShortfall { needed: limit, have: have.saturating_sub(1) });
        }
        let n = limit as usize + 1;
        let mut lambda = lambda_vector(&f.form);
        lambda.truncate(n);
        let signs = (0..n).map(|k| f.form.coeff_sign(k)).collect::<Result<Vec<_>, _>>()?;
        let squarefree = FactorizationCache::new(limit.max(1))?.squarefree_mask();
        Ok(LambdaTable { lambda, signs, squarefree })
    }

    /// Table from explicit values `λ(1..)`; signs are taken from the values.
    pub fn from_values(values: &[f64]) -> Result<Self, SignStatsError> {
        let mut lambda = vec![0.0];
        lambda.extend_from_slice(values);
        let signs = lambda.iter().map(|&v| if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 }).collect();
        let squarefree = FactorizationCache::new(values.len().max(1) as u64)?.squarefree_mask();
        Ok(LambdaTable { lambda, signs, squarefree: squarefree[..values.len() + 1].to_vec() })
    }

    pub fn limit(&self) -> u64 {
        self.lambda.len() as u64 - 1
    }

    pub fn lambda(&self, n: u64) -> f64 {
        self.lambda[n as usize]
    }

    pub fn sign(&self, n: u64) -> i8 {
        self.signs[n as usize]
    }

    pub fn is_squarefree(&self, n: u64) -> bool {
        self.squarefree[n as usize]
    }

    /// Same signs, values multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c > 0.0, "scaling must preserve signs");
        LambdaTable { lambda: self.lambda.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    fn require(&self, x: u64) -> Result<(), SignStatsError> {
        if x > self.limit() {
            Err(SignStatsError::PrecisionShortfall { needed: x, have: self.limit() })
        } else {
            Ok(())
        }
    }

    fn squarefree_upto(&self, x: u64) -> impl Iterator<Item = u64> + '_ {
        (1..=x).filter(move |&t| self.squarefree[t as usize])
    }

    /// Squarefree `t` in the open interval `(lo, hi)`, clipped to the table.
    fn squarefree_between(&self, lo: f64, hi: f64) -> impl Iterator<Item = u64> + '_ {
        let a = (lo.floor() as u64 + 1).max(1);
        let b = if hi.ceil() >= 1.0 { hi.ceil() as u64 - 1 } else { 0 };
        let b = b.min(self.limit());
        (a..=b).filter(move |&t| self.squarefree[t as usize])
    }
}

/// `(T⁺(x), T⁻(x))`: squarefree `t ≤ x` with `λ(t) > 0`, resp. `< 0`.
pub fn count_signs(table: &LambdaTable, x: u64) -> Result<(u64, u64), SignStatsError> {
    table.require(x)?;
    Ok(table.squarefree_upto(x).fold((0, 0), |(p, m), t| match table.sign(t) {
        1 => (p + 1, m),
        -1 => (p, m + 1),
        _ => (p, m),
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SignPair {
    pub plus: u64,
    pub minus: u64,
}

impl SignPair {
    pub fn start(&self) -> u64 {
        self.plus.min(self.minus)
    }

    pub fn end(&self) -> u64 {
        self.plus.max(self.minus)
    }
}

/// Greedy left-to-right pairs of consecutive nonzero squarefree coefficients of opposite
/// sign, each pair starting after the previous one ends. Returns the pairs completed by
/// `x` and `C(x)`, their number.
pub fn sign_change_pairs(table: &LambdaTable, x: u64) -> Result<(Vec<SignPair>, u64), SignStatsError> {
    table.require(x)?;
    let mut pairs = Vec::new();
    let mut open: Option<(u64, i8)> = None;
    for t in table.squarefree_upto(x) {
        let s = table.sign(t);
        if s == 0 {
            continue;
        }
        match open {
            Some((u, su)) if su != s => {
                let (plus, minus) = if s > 0 { (t, u) } else { (u, t) };
                pairs.push(SignPair { plus, minus });
                open = None;
            }
            _ => open = Some((t, s)),
        }
    }
    let c = pairs.len() as u64;
    Ok((pairs, c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SignCountRow {
    pub x: u64,
    #[serde(rename = "T_plus")]
    pub t_plus: u64,
    #[serde(rename = "T_minus")]
    pub t_minus: u64,
    #[serde(rename = "C")]
    pub c: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignChangeReport {
    pub x: u64,
    pub t_plus: u64,
    pub t_minus: u64,
    pub pairs: Vec<SignPair>,
    pub c: u64,
    pub alpha: f64,
    /// Counts at each requested threshold, ascending.
    pub thresholds: Vec<SignCountRow>,
}

/// `(x, value)` sample for [`exponent_fit`].
pub type Point = (f64, f64);

impl SignChangeReport {
    /// `(x, T⁺)` and `(x, T⁻)` points for exponent fitting.
    pub fn fit_points(&self) -> (Vec<Point>, Vec<Point>) {
        let p = self.thresholds.iter().map(|r| (r.x as f64, r.t_plus as f64)).collect();
        let m = self.thresholds.iter().map(|r| (r.x as f64, r.t_minus as f64)).collect();
        (p, m)
    }
}

/// Sign counts and pairs up to `max(xs)`, tabulated at every `x` in `xs`.
pub fn sign_change_report(table: &LambdaTable, xs: &[u64], alpha: f64) -> Result<SignChangeReport, SignStatsError> {
    let mut xs = xs.to_vec();
    xs.sort_unstable();
    xs.dedup();
    let x = xs.last().copied().unwrap_or(0);
    let (pairs, c) = sign_change_pairs(table, x)?;
    let thresholds = xs
        .iter()
        .map(|&xi| {
            let (t_plus, t_minus) = count_signs(table, xi)?;
            let c = pairs.iter().filter(|p| p.end() <= xi).count() as u64;
            Ok(SignCountRow { x: xi, t_plus, t_minus, c })
        })
        .collect::<Result<Vec<_>, SignStatsError>>()?;
    let (t_plus, t_minus) = count_signs(table, x)?;
    Ok(SignChangeReport { x, t_plus, t_minus, pairs, c, alpha, thresholds })
}

/// `Σ♭_{t≤x} λ(t) log(x/t)`.
pub fn smoothed_first_moment(table: &LambdaTable, x: u64) -> Result<f64, SignStatsError> {
    table.require(x)?;
    let lx = (x as f64).ln();
    Ok(table.squarefree_upto(x).map(|t| table.lambda(t) * (lx - (t as f64).ln())).sum())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSquare {
    pub squarefree_sum: f64,
    pub full_sum: f64,
    pub r_estimate: f64,
}

/// `Σ♭_{t≤x} λ(t)²`, `Σ_{n≤x} λ(n)²` and `Σ_{n≤x} λ(n)² / x`.
pub fn mean_square(table: &LambdaTable, x: u64) -> Result<MeanSquare, SignStatsError> {
    table.require(x)?;
    if x == 0 {
        return Ok(MeanSquare { squarefree_sum: 0.0, full_sum: 0.0, r_estimate: 0.0 });
    }
    let squarefree_sum = table.squarefree_upto(x).map(|t| table.lambda(t).powi(2)).sum();
    let full_sum: f64 = (1..=x).map(|n| table.lambda(n).powi(2)).sum();
    Ok(MeanSquare { squarefree_sum, full_sum, r_estimate: full_sum / x as f64 })
}

/// `min(log(e^{2δ}ξ), log(1/ξ))` on `e^{−2δ} ≤ ξ ≤ 1`, zero elsewhere.
pub fn kernel_weight(delta: f64, xi: f64) -> f64 {
    let l = xi.ln();
    if l < -2.0 * delta || l > 0.0 {
        return 0.0;
    }
    (2.0 * delta + l).min(-l)
}

/// Short-interval window `[x, x + h]` with `h = x^η`, `e^{2δ} = 1 + h/x`, and a sign
/// vector `ε₁..ε_A`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelParams {
    pub x: f64,
    pub eta: f64,
    pub h: f64,
    pub delta: f64,
    pub signs: Vec<i8>,
}

impl KernelParams {
    /// All signs `+1`.
    pub fn new(x: f64, eta: f64, bundle: u32) -> Result<Self, SignStatsError> {
        Self::with_signs(x, eta, vec![1; bundle as usize])
    }

    pub fn with_signs(x: f64, eta: f64, signs: Vec<i8>) -> Result<Self, SignStatsError> {
        if x < 2.0 {
            return Err(SignStatsError::InvalidParams(format!("x = {x} must be at least 2")));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(SignStatsError::InvalidParams(format!("η = {eta} must lie in (0, 1)")));
        }
        if signs.is_empty() || signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(SignStatsError::InvalidParams("sign vector must be non-empty with entries ±1".into()));
        }
        let h = x.powf(eta);
        let delta = 0.5 * (h / x).ln_1p();
        assert!(delta > 0.0 && delta >= h / (4.0 * x) && delta <= h / x);
        Ok(KernelParams { x, eta, h, delta, signs })
    }

    pub fn bundle(&self) -> u32 {
        self.signs.len() as u32
    }

    /// Whether `η > 3/4 + α`, the range the asymptotic argument needs.
    pub fn eta_in_proof_range(&self, alpha: f64) -> bool {
        self.eta > 0.75 + alpha
    }

    /// Largest index any short-interval sum touches.
    pub fn reach(&self) -> u64 {
        ((self.x + self.h).ceil() as u64).saturating_sub(1)
    }

    fn weights(&self, t: u64, m: u64) -> f64 {
        kernel_weight(self.delta, self.x / (t as f64 * (m * m) as f64))
    }
}

fn tau_small(m: u64) -> u64 {
    (1..=m).filter(|d| m.is_multiple_of(*d)).count() as u64
}

/// `Σ_{m≤A} ε_m Σ♭_{x/m² < t < (x+h)/m²} λ(t) min(log((x+h)/(tm²)), log(tm²/x))`.
pub fn short_interval_moment1(table: &LambdaTable, params: &KernelParams) -> Result<f64, SignStatsError> {
    table.require(params.reach())?;
    let mut total = 0.0;
    for (i, &eps) in params.signs.iter().enumerate() {
        let m = i as u64 + 1;
        let m2 = (m * m) as f64;
        let s: f64 = table
            .squarefree_between(params.x / m2, (params.x + params.h) / m2)
            .map(|t| table.lambda(t) * params.weights(t, m))
            .sum();
        total += eps as f64 * s;
    }
    Ok(total)
}

/// `Σ_{m≤A} τ(m)⁴ Σ♭_{x/m² < t < (x+h)/m²} λ(t)² min(log((x+h)/(tm²)), log(tm²/x))`.
pub fn short_interval_moment2(table: &LambdaTable, params: &KernelParams) -> Result<f64, SignStatsError> {
    table.require(params.reach())?;
    let mut total = 0.0;
    for m in 1..=params.bundle() as u64 {
        let m2 = (m * m) as f64;
        let s: f64 = table
            .squarefree_between(params.x / m2, (params.x + params.h) / m2)
            .map(|t| table.lambda(t).powi(2) * params.weights(t, m))
            .sum();
        total += (tau_small(m) as f64).powi(4) * s;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub x: f64,
    pub moment1: f64,
    pub moment2: f64,
    pub h: f64,
    pub delta: f64,
}

pub fn moment_row(table: &LambdaTable, params: &KernelParams) -> Result<MomentRow, SignStatsError> {
    Ok(MomentRow {
        x: params.x,
        moment1: short_interval_moment1(table, params)?,
        moment2: short_interval_moment2(table, params)?,
        h: params.h,
        delta: params.delta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub j: u64,
    pub m: u64,
    pub t: u64,
    pub t_prime: u64,
    #[serde(skip)]
    pub lo: f64,
    #[serde(skip)]
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalScan {
    pub x: f64,
    pub eta: f64,
    pub bundle: u32,
    /// `B = (1 + 1/A)²`.
    pub b: f64,
    /// `H = (BX)^η`.
    pub h: f64,
    /// Number of blocks `J = ⌊(B − 1)X/H⌋`.
    pub j_count: u64,
    pub witnesses: Vec<Witness>,
    pub eta_in_proof_range: bool,
}

/// For each block `j < J`, the first `m ≤ A` whose interval
/// `I_j(m) = ((X + jH)/m², (X + (j+1)H)/m²)` holds squarefree `t, t′` with
/// `λ(t)λ(t′) < 0`; `t` is the first nonzero squarefree index there and `t′` the first
/// after it of opposite sign.
pub fn interval_scan(
    table: &LambdaTable,
    x: f64,
    eta: f64,
    bundle: u32,
    alpha: f64,
) -> Result<IntervalScan, SignStatsError> {
    if bundle == 0 || !(eta > 0.0 && eta < 1.0) || x < 1.0 {
        return Err(SignStatsError::InvalidParams(format!("X = {x}, η = {eta}, A = {bundle}")));
    }
    let b = (1.0 + 1.0 / bundle as f64).powi(2);
    let h = (b * x).powf(eta);
    let j_count = ((b - 1.0) * x / h).floor() as u64;
    if j_count == 0 {
        return Err(SignStatsError::InvalidParams(format!("X = {x} too small: J = 0")));
    }
    table.require((x + j_count as f64 * h).ceil() as u64 - 1)?;
    let witnesses: Vec<Witness> = (0..j_count)
        .into_par_iter()
        .filter_map(|j| {
            (1..=bundle as u64).find_map(|m| {
                let m2 = (m * m) as f64;
                let lo = (x + j as f64 * h) / m2;
                let hi = (x + (j + 1) as f64 * h) / m2;
                let mut first: Option<(u64, i8)> = None;
                for t in table.squarefree_between(lo, hi) {
                    let s = table.sign(t);
                    match first {
                        None if s != 0 => first = Some((t, s)),
                        Some((u, su)) if s == -su => return Some(Witness { j, m, t: u, t_prime: t, lo, hi }),
                        _ => {}
                    }
                }
                None
            })
        })
        .collect();
    Ok(IntervalScan { x, eta, bundle, b, h, j_count, witnesses, eta_in_proof_range: eta > 0.75 + alpha })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Least-squares line through `(log x, log value)`.
pub fn exponent_fit(points: &[(f64, f64)]) -> Result<ExponentFit, SignStatsError> {
    if points.len() < 3 {
        return Err(SignStatsError::TooFewPoints(points.len()));
    }
    if let Some(&(x, value)) = points.iter().find(|&&(x, v)| !(x > 0.0 && v > 0.0)) {
        return Err(SignStatsError::NonPositive { x, value });
    }
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, v)| (x.ln(), v.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(SignStatsError::InvalidParams("exponent fit needs distinct x values".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(ExponentFit { slope, intercept, residual: (rss / n).sqrt() })
}

/// `(1 − 2α, (1 − 4α)/5)`: growth exponents expected for `T^±` and for sign changes.
pub fn target_exponents(alpha: f64) -> (f64, f64) {
    (1.0 - 2.0 * alpha, (1.0 - 4.0 * alpha) / 5.0)
}

/// `(|v| + v)/2`.
pub fn positive_part(v: f64) -> f64 {
    (v.abs() + v) / 2.0
}

/// Squarefree `t ≤ x` where `positive_part(λ(t))` disagrees with the exact sign of `λ(t)`.
pub fn positivity_device_violations(table: &LambdaTable, x: u64) -> Result<Vec<u64>, SignStatsError> {
    table.require(x)?;
    Ok(table
        .squarefree_upto(x)
        .filter(|&t| {
            let v = table.lambda(t);
            let expect = if table.sign(t) > 0 { v } else { 0.0 };
            positive_part(v) != expect
        })
        .collect())
}

fn write_rows<W: Write, R: Serialize>(w: W, header: &[&str], rows: &[R]) -> Result<(), SignStatsError> {
    let err = |e: csv::Error| SignStatsError::Csv(e.to_string());
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header).map_err(err)?;
    for r in rows {
        out.serialize(r).map_err(err)?;
    }
    out.flush().map_err(|e| SignStatsError::Csv(e.to_string()))
}

/// `x, T_plus, T_minus, C`.
pub fn write_sign_counts_csv<W: Write>(w: W, rows: &[SignCountRow]) -> Result<(), SignStatsError> {
    write_rows(w, &["x", "T_plus", "T_minus", "C"], rows)
}

/// `j, m, t, t_prime`.
pub fn write_witnesses_csv<W: Write>(w: W, rows: &[Witness]) -> Result<(), SignStatsError> {
    write_rows(w, &["j", "m", "t", "t_prime"], rows)
}

/// `x, moment1, moment2, h, delta`.
pub fn write_moments_csv<W: Write>(w: W, rows: &[MomentRow]) -> Result<(), SignStatsError> {
    write_rows(w, &["x", "moment1", "moment2", "h", "delta"], rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(values: &[f64]) -> LambdaTable {
        LambdaTable::from_values(values).unwrap()
    }

    #[test]
    fn counts_on_synthetic_data() {
        // t = 1:+, 2:−, 3:0, 4 not squarefree, 5:+
        let t = table(&[1.0, -1.0, 0.0, -7.0, 2.0]);
        assert_eq!(count_signs(&t, 5).unwrap(), (2, 1));
        assert_eq!(count_signs(&t, 0).unwrap(), (0, 0));
        assert!(matches!(count_signs(&t, 6), Err(SignStatsError::PrecisionShortfall { .. })));
        let z = table(&[0.0, 0.0, 0.0]);
        assert_eq!(count_signs(&z, 3).unwrap(), (0, 0));
    }

    #[test]
    fn pairs_on_synthetic_data() {
        let t = table(&[1.0, -1.0, 0.0, 3.0, 2.0]);
        let (pairs, c) = sign_change_pairs(&t, 5).unwrap();
        assert_eq!(pairs, vec![SignPair { plus: 1, minus: 2 }]);
        assert_eq!(c, 1);
        let pos = table(&[1.0; 30]);
        assert_eq!(sign_change_pairs(&pos, 30).unwrap(), (vec![], 0));
        // zeros between opposite signs are skipped
        let t = table(&[0.0, 5.0, 0.0, 0.0, 0.0, -1.0]);
        assert_eq!(sign_change_pairs(&t, 6).unwrap().0, vec![SignPair { plus: 2, minus: 6 }]);
        // a run of one sign opens the pair at its last element
        let t = table(&[1.0, 1.0, 1.0, 1.0, -1.0]);
        assert_eq!(sign_change_pairs(&t, 5).unwrap().0, vec![SignPair { plus: 3, minus: 5 }]);
    }

    #[test]
    fn kernel_weight_cases() {
        let d = 0.01;
        assert_eq!(kernel_weight(d, 1.0), 0.0);
        assert!((kernel_weight(d, (-d).exp()) - d).abs() < 1e-15);
        assert_eq!(kernel_weight(d, (-3.0 * d).exp()), 0.0);
        assert_eq!(kernel_weight(d, 1.5), 0.0);
    }

    #[test]
    fn kernel_params_invariants() {
        let p = KernelParams::new(1e4, 0.85, 3).unwrap();
        assert!(p.delta >= p.h / (4.0 * p.x) && p.delta <= p.h / p.x);
        assert!(!p.eta_in_proof_range(DEFAULT_ALPHA));
        assert!(KernelParams::new(1.0, 0.85, 3).is_err());
        assert!(KernelParams::new(1e4, 1.0, 3).is_err());
        assert!(KernelParams::with_signs(1e4, 0.5, vec![1, 0]).is_err());
    }

    #[test]
    fn moments_edge_cases() {
        let t = table(&[1.0, -2.0, 0.5, 1.0, 3.0, -1.0, 2.0, 0.25]);
        assert_eq!(smoothed_first_moment(&t, 1).unwrap(), 0.0);
        assert_eq!(mean_square(&t, 0).unwrap().full_sum, 0.0);
        let zero = table(&[0.0; 200]);
        let p = KernelParams::new(100.0, 0.5, 3).unwrap();
        assert_eq!(short_interval_moment2(&zero, &p).unwrap(), 0.0);
        // window (3.5, 3.5 + 3.5^0.01) holds no squarefree integer
        let p = KernelParams::new(3.5, 0.01, 1).unwrap();
        assert_eq!(short_interval_moment1(&t, &p).unwrap(), 0.0);
    }

    #[test]
    fn exponent_fit_cases() {
        let pts: Vec<(f64, f64)> = [10.0, 100.0, 1000.0, 1e4].iter().map(|&x: &f64| (x, 3.0 * x.powf(0.7))).collect();
        let f = exponent_fit(&pts).unwrap();
        assert!((f.slope - 0.7).abs() < 1e-12 && (f.intercept - 3f64.ln()).abs() < 1e-11);
        let c = exponent_fit(&[(1.0, 5.0), (2.0, 5.0), (3.0, 5.0)]).unwrap();
        assert!(c.slope.abs() < 1e-15);
        assert!(matches!(exponent_fit(&[(1.0, 1.0), (2.0, 1.0)]), Err(SignStatsError::TooFewPoints(2))));
        assert!(matches!(exponent_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]), Err(SignStatsError::NonPositive { .. })));
        let (a, b) = target_exponents(DEFAULT_ALPHA);
        assert!((a - 2.0 / 3.0).abs() < 1e-15 && (b - 1.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn csv_headers() {
        let mut buf = Vec::new();
        write_sign_counts_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,T_plus,T_minus,C\n");
        let mut buf = Vec::new();
        let w = Witness { j: 0, m: 1, t: 5, t_prime: 6, lo: 4.0, hi: 7.0 };
        write_witnesses_csv(&mut buf, &[w]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "j,m,t,t_prime\n0,1,5,6\n");
    }

    fn values() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(prop_oneof![Just(0.0), -3.0..3.0f64], 1..400)
    }

    proptest! {
        #[test]
        fn pair_invariants(v in values()) {
            let t = table(&v);
            let n = t.limit();
            let (pairs, c) = sign_change_pairs(&t, n).unwrap();
            let (tp, tm) = count_signs(&t, n).unwrap();
            prop_assert!(c <= tp.min(tm));
            for w in pairs.windows(2) {
                prop_assert!(w[0].end() < w[1].start());
            }
            for p in &pairs {
                prop_assert!(t.sign(p.plus) > 0 && t.sign(p.minus) < 0);
                prop_assert!(t.is_squarefree(p.plus) && t.is_squarefree(p.minus));
                for s in p.start() + 1..p.end() {
                    prop_assert!(!t.is_squarefree(s) || t.sign(s) == 0);
                }
            }
            // nondecreasing counts
            let mut last = (0, 0, 0);
            for x in 0..=n {
                let (a, b) = count_signs(&t, x).unwrap();
                let c = sign_change_pairs(&t, x).unwrap().1;
                prop_assert!(a >= last.0 && b >= last.1 && c >= last.2);
                last = (a, b, c);
            }
            prop_assert!(positivity_device_violations(&t, n).unwrap().is_empty());
        }

        #[test]
        fn moment_linearity(v in proptest::collection::vec(-3.0..3.0f64, 150..300), flip in any::<[bool; 3]>()) {
            let t = table(&v);
            let x = t.limit();
            let a = smoothed_first_moment(&t, x).unwrap();
            let b = smoothed_first_moment(&t.scaled(2.0), x).unwrap();
            prop_assert!((b - 2.0 * a).abs() <= 1e-9 * (1.0 + a.abs()));
            let signs: Vec<i8> = flip.iter().map(|&f| if f { -1 } else { 1 }).collect();
            let neg: Vec<i8> = signs.iter().map(|s| -s).collect();
            let p = KernelParams::with_signs(100.0, 0.6, signs).unwrap();
            let q = KernelParams::with_signs(100.0, 0.6, neg).unwrap();
            let m1 = short_interval_moment1(&t, &p).unwrap();
            prop_assert!((m1 + short_interval_moment1(&t, &q).unwrap()).abs() < 1e-12);
            prop_assert!(short_interval_moment2(&t, &p).unwrap() >= 0.0);
            let ms = mean_square(&t, x).unwrap();
            prop_assert!(ms.squarefree_sum <= ms.full_sum + 1e-12);
        }

        #[test]
        fn kernel_symmetry(delta in 1e-4..0.5f64, u in 0.0..1.0f64) {
            let xi = (-2.0 * delta * u).exp();
            let mirror = (-2.0 * delta).exp() / xi;
            prop_assert!((kernel_weight(delta, xi) - kernel_weight(delta, mirror)).abs() < 1e-12);
        }

        #[test]
        fn scan_witnesses_are_valid(v in proptest::collection::vec(prop_oneof![Just(0.0), -3.0..3.0f64], 3000..3001)) {
            let t = table(&v);
            let s = interval_scan(&t, 1500.0, 0.5, 3, DEFAULT_ALPHA).unwrap();
            for w in &s.witnesses {
                prop_assert!(t.sign(w.t) as i32 * t.sign(w.t_prime) as i32 == -1);
                prop_assert!((w.t as f64) > w.lo && (w.t_prime as f64) < w.hi);
            }
            // all candidate intervals are pairwise disjoint
            let mut iv: Vec<(f64, f64)> = Vec::new();
            for j in 0..s.j_count {
                for m in 1..=3u64 {
                    let m2 = (m * m) as f64;
                    iv.push(((1500.0 + j as f64 * s.h) / m2, (1500.0 + (j + 1) as f64 * s.h) / m2));
                }
            }
            iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for w in iv.windows(2) {
                prop_assert!(w[0].1 <= w[1].0 + 1e-9);
            }
        }
    }
}
