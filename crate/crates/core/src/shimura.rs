//! Shimura lift coefficients from T_{p²} eigenvalues, and the coefficient law at square
//! multiples `ĥ(tn²)`.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::arith::{chi_t, is_squarefree_int, ArithError, FactorizationCache};
use crate::hecke::{HeckeEigenform, HeckeError};
use crate::numfield::{FieldScalar, NumberField};

#[derive(Debug, Error)]
pub enum ShimuraError {
    #[error("no eigenvalue ω_{0} available")]
    MissingEigenvalue(u64),
    #[error("{0} is not squarefree")]
    NotSquarefree(u64),
    #[error("index {n} is beyond the available range {limit}")]
    OutOfRange { n: u64, limit: u64 },
    #[error("Deligne bound violated at p = {p}: |ω_p| / 2p^(ℓ-1/2) = {ratio}")]
    DeligneViolation { p: u64, ratio: f64 },
    #[error("non-finite bound ratio at t = {t}, n = {n}")]
    NonFinite { t: u64, n: u64 },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Hecke(#[from] HeckeError),
}

/// Coefficients `Ŝh(1..=N)` of the weight-2ℓ, level-2 lift of an eigenform.
#[derive(Clone, Debug)]
pub struct ShimuraLiftSeries {
    ell: u32,
    field: Arc<NumberField>,
    eigenvalues: BTreeMap<u64, FieldScalar>,
    /// Index 0 holds zero.
    coeffs: Vec<FieldScalar>,
    sieve: FactorizationCache,
}

impl ShimuraLiftSeries {
    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn weight(&self) -> u32 {
        2 * self.ell
    }

    pub fn level(&self) -> u32 {
        2
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn limit(&self) -> u64 {
        self.coeffs.len() as u64 - 1
    }

    pub fn eigenvalues(&self) -> &BTreeMap<u64, FieldScalar> {
        &self.eigenvalues
    }

    pub fn sieve(&self) -> &FactorizationCache {
        &self.sieve
    }

    pub fn coeff(&self, n: u64) -> Result<&FieldScalar, ShimuraError> {
        if n == 0 || n > self.limit() {
            return Err(ShimuraError::OutOfRange { n, limit: self.limit() });
        }
        Ok(&self.coeffs[n as usize])
    }

    /// `n, Ŝh(n), float` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), ShimuraError> {
        #[derive(Serialize)]
        struct Row {
            n: u64,
            sh: String,
            float: f64,
        }
        let mut out = csv::Writer::from_writer(w);
        for n in 1..=self.limit() {
            let c = &self.coeffs[n as usize];
            out.serialize(Row { n, sh: c.display(), float: c.to_f64() })
                .map_err(|e| ShimuraError::Csv(e.to_string()))?;
        }
        out.flush().map_err(|e| ShimuraError::Csv(e.to_string()))
    }
}

/// `Ŝh(p^r)` for `0 ≤ r ≤ r_max` from `Ŝh(p^{r+1}) = ω_p Ŝh(p^r) − χ₀(p) p^{2ℓ−1} Ŝh(p^{r−1})`.
fn prime_power_values(
    field: &Arc<NumberField>,
    omega: &FieldScalar,
    p: u64,
    ell: u32,
    r_max: u32,
) -> Vec<FieldScalar> {
    let c = if p == 2 {
        BigRational::zero()
    } else {
        BigRational::from_integer(BigInt::from(p).pow(2 * ell - 1))
    };
    let mut v = vec![FieldScalar::from_int(field, 1)];
    if r_max >= 1 {
        v.push(omega.clone());
    }
    for r in 1..r_max as usize {
        let next = omega.mul(&v[r]).sub(&v[r - 1].scale(&c));
        v.push(next);
    }
    v
}

/// Lift coefficients `Ŝh(1..=n)` of `f`. Needs `ω_p` for every prime `p ≤ n`.
pub fn lift_coefficients(f: &HeckeEigenform, n: u64) -> Result<ShimuraLiftSeries, ShimuraError> {
    lift_from_eigenvalues(f.ell(), f.field(), &f.eigenvalues, n)
}

pub fn lift_from_eigenvalues(
    ell: u32,
    field: &Arc<NumberField>,
    eigenvalues: &BTreeMap<u64, FieldScalar>,
    n: u64,
) -> Result<ShimuraLiftSeries, ShimuraError> {
    let sieve = FactorizationCache::new(n.max(1))?;
    let mut powers: BTreeMap<u64, Vec<FieldScalar>> = BTreeMap::new();
    for p in sieve.primes() {
        let omega = eigenvalues.get(&p).ok_or(ShimuraError::MissingEigenvalue(p))?;
        let mut r_max = 0;
        let mut q = 1u64;
        while q <= n / p {
            q *= p;
            r_max += 1;
        }
        powers.insert(p, prime_power_values(field, omega, p, ell, r_max));
    }
    let mut coeffs = Vec::with_capacity(n as usize + 1);
    coeffs.push(FieldScalar::from_int(field, 0));
    for k in 1..=n {
        let mut c = FieldScalar::from_int(field, 1);
        for (p, e) in sieve.factorize(k)? {
            c = c.mul(&powers[&p][e as usize]);
        }
        coeffs.push(c);
    }
    Ok(ShimuraLiftSeries { ell, field: field.clone(), eigenvalues: eigenvalues.clone(), coeffs, sieve })
}

/// `ĥ(t)·Σ_{d|n} χ_t(n/d) μ(n/d) (n/d)^{ℓ−1} Ŝh(d)`, the predicted value of `ĥ(tn²)`.
pub fn coeff_at_t_nsq(
    f: &HeckeEigenform,
    lift: &ShimuraLiftSeries,
    t: u64,
    n: u64,
) -> Result<FieldScalar, ShimuraError> {
    if !is_squarefree_int(t as i64) {
        return Err(ShimuraError::NotSquarefree(t));
    }
    if n > lift.limit() {
        return Err(ShimuraError::OutOfRange { n, limit: lift.limit() });
    }
    let ell = f.ell();
    let mut sum = FieldScalar::from_int(lift.field(), 0);
    for d in lift.sieve().divisors(n)? {
        let e = n / d;
        let mu = lift.sieve().mobius(e)?;
        let chi = chi_t(t as i64, ell, e)?;
        let s = mu as i64 * chi as i64;
        if s == 0 {
            continue;
        }
        let w = BigRational::from_integer(BigInt::from(s) * BigInt::from(e).pow(ell - 1));
        sum = sum.add(&lift.coeff(d)?.scale(&w));
    }
    Ok(f.form.coeff(t as usize).mul(&sum))
}

/// A pair `(t, n)` where the convolution disagrees with the expansion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UksMismatch {
    pub t: u64,
    pub n: u64,
}

/// Compare `coeff_at_t_nsq` with the expanded `ĥ(tn²)` for every squarefree `t` and `n ≥ 1`
/// with `tn² ≤ bound`. Returns the number of pairs checked and any mismatches.
pub fn check_square_multiples(
    f: &HeckeEigenform,
    lift: &ShimuraLiftSeries,
    bound: u64,
) -> Result<(usize, Vec<UksMismatch>), ShimuraError> {
    let limit = f.form.precision() as u64 - 1;
    if bound > limit {
        return Err(ShimuraError::OutOfRange { n: bound, limit });
    }
    let mut checked = 0;
    let mut bad = Vec::new();
    for t in (1..=bound).filter(|&t| is_squarefree_int(t as i64)) {
        let mut n = 1u64;
        while t * n * n <= bound {
            let predicted = coeff_at_t_nsq(f, lift, t, n)?;
            if predicted != f.form.coeff((t * n * n) as usize) {
                bad.push(UksMismatch { t, n });
            }
            checked += 1;
            n += 1;
        }
    }
    Ok((checked, bad))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientBoundReport {
    pub sup_ratio: f64,
    pub argmax: (u64, u64),
    pub pairs: usize,
}

/// Supremum of `|ĥ(tn²)| / (|ĥ(t)| n^{ℓ−1/2} τ(n) ψ(n))` over squarefree `t` with `ĥ(t) ≠ 0`
/// and `tn² ≤ bound`, with `ψ` replaced by its dyadic upper bound.
pub fn coefficient_bound_report(
    f: &HeckeEigenform,
    sieve: &FactorizationCache,
    bound: u64,
) -> Result<CoefficientBoundReport, ShimuraError> {
    let limit = (f.form.precision() as u64 - 1).min(sieve.limit());
    if bound > limit {
        return Err(ShimuraError::OutOfRange { n: bound, limit });
    }
    let ell = f.ell() as f64;
    let mut report = CoefficientBoundReport { sup_ratio: 0.0, argmax: (0, 0), pairs: 0 };
    for t in (1..=bound).filter(|&t| is_squarefree_int(t as i64)) {
        let ht = f.form.coeff_f64(t as usize).abs();
        if f.form.coeff(t as usize).is_zero() {
            continue;
        }
        let mut n = 1u64;
        while t * n * n <= bound {
            let d = sieve.tau_sigma_psi(n)?;
            let psi = d.psi_upper.to_f64().unwrap_or(f64::INFINITY);
            let den = ht * (n as f64).powf(ell - 0.5) * d.tau as f64 * psi;
            let r = f.form.coeff_f64((t * n * n) as usize).abs() / den;
            if !r.is_finite() {
                return Err(ShimuraError::NonFinite { t, n });
            }
            if r > report.sup_ratio {
                report.sup_ratio = r;
                report.argmax = (t, n);
            }
            report.pairs += 1;
            n += 1;
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeligneReport {
    /// `max |Ŝh(d)| / (d^{ℓ−1/2} τ(d))` and its argument.
    pub sup_ratio: f64,
    pub argmax: u64,
    /// `max |ω_p| / (2 p^{ℓ−1/2})` over the primes checked, and its argument.
    pub worst_prime_ratio: f64,
    pub worst_prime: u64,
}

/// Relative slack allowed on `|ω_p| ≤ 2p^{ℓ−1/2}`.
pub const DELIGNE_TOLERANCE: f64 = 1e-6;

/// Deligne-type scan of `Ŝh(d)` for `d ≤ bound`. A prime with
/// `|ω_p| > 2p^{ℓ−1/2}(1 + DELIGNE_TOLERANCE)` is an error.
pub fn deligne_check(lift: &ShimuraLiftSeries, bound: u64) -> Result<DeligneReport, ShimuraError> {
    if bound > lift.limit() {
        return Err(ShimuraError::OutOfRange { n: bound, limit: lift.limit() });
    }
    let e = lift.ell() as f64 - 0.5;
    let mut r = DeligneReport { sup_ratio: 0.0, argmax: 0, worst_prime_ratio: 0.0, worst_prime: 0 };
    for d in 1..=bound {
        let v = lift.coeff(d)?.to_f64().abs();
        let ratio = v / ((d as f64).powf(e) * lift.sieve().tau(d)? as f64);
        if ratio > r.sup_ratio {
            r.sup_ratio = ratio;
            r.argmax = d;
        }
    }
    for (&p, w) in lift.eigenvalues().range(..=bound) {
        let ratio = w.to_f64().abs() / (2.0 * (p as f64).powf(e));
        if ratio > 1.0 + DELIGNE_TOLERANCE {
            return Err(ShimuraError::DeligneViolation { p, ratio });
        }
        if ratio > r.worst_prime_ratio {
            r.worst_prime_ratio = ratio;
            r.worst_prime = p;
        }
    }
    Ok(r)
}

/// Largest index `n` with `tn² ≤ bound` for which both `ĥ(tn²)/ĥ(t)` and `ĥ(t′n²)/ĥ(t′)`
/// are available, and whether they agree for every `n` up to it.
pub fn t_independence(f: &HeckeEigenform, t: u64, t_prime: u64) -> Result<(u64, bool), ShimuraError> {
    for s in [t, t_prime] {
        if !is_squarefree_int(s as i64) {
            return Err(ShimuraError::NotSquarefree(s));
        }
    }
    let limit = f.form.precision() as u64 - 1;
    let (a, b) = (f.form.coeff(t as usize), f.form.coeff(t_prime as usize));
    let (Some(ai), Some(bi)) = (a.inv(), b.inv()) else {
        return Ok((0, true));
    };
    let mut n = 1u64;
    while t.max(t_prime) * (n + 1) * (n + 1) <= limit {
        n += 1;
    }
    let agree = (1..=n).all(|k| {
        let x = f.form.coeff((t * k * k) as usize).mul(&ai);
        let y = f.form.coeff((t_prime * k * k) as usize).mul(&bi);
        x == y
    });
    Ok((n, agree))
}
