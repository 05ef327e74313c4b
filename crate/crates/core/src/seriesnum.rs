//! Truncated Dirichlet series of the normalized coefficients, and a vertical-line
//! quadrature of the smoothing kernel used to check its closed form.

use std::collections::VecDeque;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::signstats::LambdaTable;

#[derive(Debug, Error)]
pub enum SeriesError {
    #[error("truncation {needed} exceeds the table limit {have}")]
    PrecisionShortfall { needed: u64, have: u64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("quadrature did not settle: {previous} at T = {t_previous}, {current} at T = {t_current}")]
    NonConvergence { previous: f64, current: f64, t_previous: f64, t_current: f64 },
    #[error("csv: {0}")]
    Csv(String),
}

/// `Σ_{n≤N} a_n n^{−s}` summed from `n = N` down to `1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirichletPartial {
    pub s: Complex64,
    pub n: u64,
    pub value: Complex64,
    /// `min_{M≤N} max_{M/2<n≤M} |a_n n^{−s}|`.
    pub trailing: f64,
}

fn partial<F: Fn(u64) -> f64>(table: &LambdaTable, s: Complex64, n: u64, coeff: F) -> Result<DirichletPartial, SeriesError> {
    if n > table.limit() {
        return Err(SeriesError::PrecisionShortfall { needed: n, have: table.limit() });
    }
    let mags: Vec<f64> = (1..=n).map(|k| coeff(k).abs() * (k as f64).powf(-s.re)).collect();
    let mut value = Complex64::new(0.0, 0.0);
    for k in (1..=n).rev() {
        let a = coeff(k);
        if a != 0.0 {
            value += a * Complex64::new(k as f64, 0.0).powc(-s);
        }
    }
    // sliding maximum over the window (M/2, M]
    let mut trailing = f64::INFINITY;
    let mut window: VecDeque<u64> = VecDeque::new();
    for m in 1..=n {
        while window.back().is_some_and(|&b| mags[b as usize - 1] <= mags[m as usize - 1]) {
            window.pop_back();
        }
        window.push_back(m);
        while window.front().is_some_and(|&f| f <= m / 2) {
            window.pop_front();
        }
        trailing = trailing.min(mags[*window.front().unwrap() as usize - 1]);
    }
    if n == 0 {
        trailing = 0.0;
    }
    Ok(DirichletPartial { s, n, value, trailing })
}

/// `Σ_{n≤N} λ(n)² n^{−s}`.
pub fn d_partial(table: &LambdaTable, s: Complex64, n: u64) -> Result<DirichletPartial, SeriesError> {
    partial(table, s, n, |k| table.lambda(k).powi(2))
}

/// `Σ♭_{t≤N} λ(t) t^{−s}`.
pub fn m_partial(table: &LambdaTable, s: Complex64, n: u64) -> Result<DirichletPartial, SeriesError> {
    partial(table, s, n, |k| if table.is_squarefree(k) { table.lambda(k) } else { 0.0 })
}

/// `Σ_{N<n≤2N} λ(n)² n^{−σ}`.
pub fn d_tail_majorant(table: &LambdaTable, sigma: f64, n: u64) -> Result<f64, SeriesError> {
    if 2 * n > table.limit() {
        return Err(SeriesError::PrecisionShortfall { needed: 2 * n, have: table.limit() });
    }
    Ok((n + 1..=2 * n).map(|k| table.lambda(k).powi(2) * (k as f64).powf(-sigma)).sum())
}

/// `Σ♭_{N<t≤2N} |λ(t)| t^{−σ}`.
pub fn m_tail_majorant(table: &LambdaTable, sigma: f64, n: u64) -> Result<f64, SeriesError> {
    if 2 * n > table.limit() {
        return Err(SeriesError::PrecisionShortfall { needed: 2 * n, have: table.limit() });
    }
    Ok((n + 1..=2 * n)
        .filter(|&k| table.is_squarefree(k))
        .map(|k| table.lambda(k).abs() * (k as f64).powf(-sigma))
        .sum())
}

/// `Σ_{n≤x} λ(n)² / x`.
pub fn residue_estimate(table: &LambdaTable, x: u64) -> Result<f64, SeriesError> {
    if x > table.limit() {
        return Err(SeriesError::PrecisionShortfall { needed: x, have: table.limit() });
    }
    if x == 0 {
        return Ok(0.0);
    }
    Ok((1..=x).map(|n| table.lambda(n).powi(2)).sum::<f64>() / x as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvaluationRow {
    pub sigma: f64,
    pub tau: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub real: f64,
    pub imag: f64,
}

impl From<&DirichletPartial> for EvaluationRow {
    fn from(p: &DirichletPartial) -> Self {
        EvaluationRow { sigma: p.s.re, tau: p.s.im, n: p.n, real: p.value.re, imag: p.value.im }
    }
}

/// `sigma, tau, N, real, imag`.
pub fn write_evaluations_csv<W: Write>(w: W, rows: &[EvaluationRow]) -> Result<(), SeriesError> {
    let err = |e: csv::Error| SeriesError::Csv(e.to_string());
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(["sigma", "tau", "N", "real", "imag"]).map_err(err)?;
    for r in rows {
        out.serialize(r).map_err(err)?;
    }
    out.flush().map_err(|e| SeriesError::Csv(e.to_string()))
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const GK_W: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const G_W: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate on `[a, b]` and its gap to the embedded 7-point Gauss rule.
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = f(c) * GK_W[7];
    let mut g = f(c) * G_W[3];
    for i in 0..7 {
        let d = h * GK_X[i];
        let s = f(c - d) + f(c + d);
        k += s * GK_W[i];
        if i % 2 == 1 {
            g += s * G_W[i / 2];
        }
    }
    (k * h, ((k - g) * h).norm())
}

fn adaptive<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Complex64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1)
}

/// `∫_a^b f` over `panels` equal panels, each refined adaptively.
fn integrate<F: Fn(f64) -> Complex64 + Sync>(f: &F, a: f64, b: f64, panels: usize, tol: f64) -> Complex64 {
    let w = (b - a) / panels as f64;
    let per = tol / panels as f64;
    (0..panels)
        .into_par_iter()
        .map(|i| adaptive(f, a + i as f64 * w, a + (i + 1) as f64 * w, per, 30))
        .reduce(|| Complex64::new(0.0, 0.0), |x, y| x + y)
}

/// `∫_{w₀}^{∞} e^{Lw} w^{−2} dw` along a horizontal ray from `w₀ = c + iT`, to the right
/// when `L ≤ 0` and to the left when `L > 0`. This equals the integral up the vertical
/// ray from `w₀`: the integrand is holomorphic between the two rays and decays on arcs.
fn ray_tail(l: f64, w0: Complex64, tol: f64) -> Complex64 {
    let dir = if l > 0.0 { -1.0 } else { 1.0 };
    let f = |r: f64| {
        let w = w0 + dir * r;
        (l * w).exp() / (w * w) * dir
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut lo = 0.0;
    let mut hi = w0.im.max(1.0);
    for _ in 0..200 {
        let part = adaptive(&f, lo, hi, tol * 1e-3, 30);
        total += part;
        // remaining mass is below e^{L(c+dir·hi)}/(hi − c)
        let bound = (l * (w0.re + dir * hi)).exp() / (hi - w0.re.abs()).max(1.0);
        if bound < tol * 1e-3 {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    total
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContourEstimate {
    /// `(1/2πi) ∫_{c−i∞}^{c+i∞} (e^{δs}−1)² s^{−2} ξ^s ds`.
    pub value: Complex64,
    /// Contribution of `|ℑs| ≤ T` alone.
    pub truncated: f64,
    /// Final `T`.
    pub t: f64,
}

/// Absolute accuracy targeted by [`kernel_contour_oracle`].
pub const CONTOUR_TOLERANCE: f64 = 1e-6;

/// Quadrature of `(1/2πi) ∫ (e^{δs}−1)² s^{−2} ξ^s ds` on `ℜs = c`. The segment
/// `|ℑs| ≤ T` is integrated with adaptive Gauss–Kronrod panels; the rest is added by
/// moving each exponential term of the tail onto a horizontal ray. `T` doubles until two
/// successive estimates agree within half of [`CONTOUR_TOLERANCE`].
pub fn kernel_contour_oracle(delta: f64, xi: f64, c: f64, t: f64) -> Result<ContourEstimate, SeriesError> {
    if !(delta > 0.0 && xi > 0.0 && c > 0.0 && t > 0.0) {
        return Err(SeriesError::InvalidParams(format!("δ = {delta}, ξ = {xi}, c = {c}, T = {t}")));
    }
    let lx = xi.ln();
    let integrand = |tau: f64| {
        let s = Complex64::new(c, tau);
        let e = (delta * s).exp() - 1.0;
        e * e / (s * s) * (lx * s).exp()
    };
    let estimate = |t: f64| -> (f64, f64) {
        let freq = lx.abs() + 2.0 * delta + 1.0 / t;
        let panels = ((t * freq).ceil() as usize).clamp(16, 1 << 20);
        let head = integrate(&integrand, 0.0, t, panels, 1e-10);
        let w0 = Complex64::new(c, t);
        let tail: Complex64 = [(2.0, 1.0), (1.0, -2.0), (0.0, 1.0)]
            .iter()
            .map(|&(k, coef)| coef * ray_tail(lx + k * delta, w0, 1e-10))
            .sum();
        let tail = tail * Complex64::new(0.0, -1.0);
        (head.re / std::f64::consts::PI, (head + tail).re / std::f64::consts::PI)
    };
    let (_, mut prev) = estimate(t);
    let mut t_prev = t;
    for _ in 0..6 {
        let t_next = 2.0 * t_prev;
        let (truncated, cur) = estimate(t_next);
        if (cur - prev).abs() <= 0.5 * CONTOUR_TOLERANCE {
            return Ok(ContourEstimate { value: Complex64::new(cur, 0.0), truncated, t: t_next });
        }
        if t_next >= 64.0 * t {
            return Err(SeriesError::NonConvergence { previous: prev, current: cur, t_previous: t_prev, t_current: t_next });
        }
        prev = cur;
        t_prev = t_next;
    }
    unreachable!()
}

/// Twenty `ξ` values spread geometrically over `[e^{−3δ}, 2]`, plus the breakpoints
/// `e^{−2δ}, e^{−δ}, 1`.
pub fn kernel_grid(delta: f64) -> Vec<f64> {
    let lo = -3.0 * delta;
    let hi = 2f64.ln();
    let mut v: Vec<f64> = (0..20).map(|i| (lo + (hi - lo) * i as f64 / 19.0).exp()).collect();
    v.extend([(-2.0 * delta).exp(), (-delta).exp(), 1.0]);
    v
}
