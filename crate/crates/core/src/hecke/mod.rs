//! Hecke operators T_{p²} on half-integral weight cusp forms and simultaneous eigenforms.

mod cache;
mod eigen;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::arith::{is_prime_u64, kronecker_symbol};
use crate::linalg::{mat_mul, rank, solve_columns, Matrix};
use crate::modspace::{cusp_space_basis, safety_precision, HalfIntegralCuspForm, ModspaceError};
use crate::numfield::NumFieldError;
use crate::qseries::QExpansion;

pub use cache::{load_eigenforms, save_eigenforms, EigenformCacheFile};
pub use eigen::{
    eigenforms, lambda_values, numeric_eigenvalue_deviation, EigenConfig, EigenDecomposition, Embedding, HeckeEigenform,
    SkipReason, SkippedFactor,
};

#[derive(Debug, Error)]
pub enum HeckeError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("insufficient precision for T_{{{p}²}}: need {needed} coefficients, have {have}")]
    InsufficientPrecision { p: u64, needed: usize, have: usize },
    #[error("T_{{{p}²}} image of basis form {index} is not in the span of the basis")]
    SolveFailed { p: u64, index: usize },
    #[error("Hecke matrices for p = {p} and q = {q} do not commute")]
    NotCommuting { p: u64, q: u64 },
    #[error("repeated factor {factor} has a {found}-dimensional eigenspace, multiplicity {multiplicity}")]
    NonDiagonalizable { factor: String, found: usize, multiplicity: u32 },
    #[error("eigen-identity T_{{{p}²}} f = ω f fails at n = {n}")]
    EigenIdentity { p: u64, n: usize },
    #[error("no Hecke primes supplied")]
    EmptyPrimeSet,
    #[error("eigenform cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Modspace(#[from] ModspaceError),
    #[error(transparent)]
    Field(#[from] NumFieldError),
}

/// `χ₀(p)`: principal character modulo 2.
fn chi0(p: u64) -> i64 {
    (p % 2) as i64
}

fn check_prime(p: u64) -> Result<(), HeckeError> {
    if is_prime_u64(p) {
        Ok(())
    } else {
        Err(HeckeError::NotPrime(p))
    }
}

/// Output length of `T_{p²}` on `n` input coefficients: indices `m` with `p²m < n`.
pub fn output_len(n: usize, p: u64) -> usize {
    let p2 = (p * p) as usize;
    n.div_ceil(p2)
}

/// Three-term integer multipliers of `T_{p²}` at index `n`:
/// `(middle, last)` with `ĥ'(n) = ĥ(p²n) + middle·ĥ(n) + last·ĥ(n/p²)`.
fn multipliers(n: usize, p: u64, ell: u32) -> (BigInt, BigInt) {
    let c = chi0(p);
    if c == 0 {
        return (BigInt::zero(), BigInt::zero());
    }
    let sgn = if ell.is_multiple_of(2) { 1 } else { -1 };
    let k = kronecker_symbol(sgn * n as i64, p as i64) as i64;
    let middle = BigInt::from(c * k) * BigInt::from(p).pow(ell - 1);
    let p2 = (p * p) as usize;
    let last = if n.is_multiple_of(p2) { BigInt::from(c) * BigInt::from(p).pow(2 * ell - 1) } else { BigInt::zero() };
    (middle, last)
}

/// `T_{p²}` on a coefficient vector ĥ(0..N): ĥ'(n) = ĥ(p²n) + χ₀(p)((−1)^ℓ n / p) p^{ℓ−1} ĥ(n)
/// + χ₀(p) p^{2ℓ−1} ĥ(n/p²), with ĥ(n/p²) = 0 unless p² | n.
pub fn hecke_apply(coeffs: &[BigRational], p: u64, ell: u32) -> Result<Vec<BigRational>, HeckeError> {
    check_prime(p)?;
    let m = output_len(coeffs.len(), p);
    if m == 0 {
        return Err(HeckeError::InsufficientPrecision { p, needed: 1, have: coeffs.len() });
    }
    let p2 = (p * p) as usize;
    Ok((0..m)
        .map(|n| {
            let (mid, last) = multipliers(n, p, ell);
            let mut v = coeffs[p2 * n].clone();
            if !mid.is_zero() {
                v += &coeffs[n] * BigRational::from_integer(mid);
            }
            if !last.is_zero() {
                v += &coeffs[n / p2] * BigRational::from_integer(last);
            }
            v
        })
        .collect())
}

/// `T_{p²}` on a width-1 series, working on the integer numerators.
pub fn hecke_apply_series(s: &QExpansion, p: u64, ell: u32) -> Result<QExpansion, HeckeError> {
    check_prime(p)?;
    assert_eq!(s.width(), 1, "Hecke operators act on expansions at ∞");
    let nums = s.numerators();
    let m = output_len(nums.len(), p);
    if m == 0 {
        return Err(HeckeError::InsufficientPrecision { p, needed: 1, have: nums.len() });
    }
    let p2 = (p * p) as usize;
    let out: Vec<BigInt> = (0..m)
        .into_par_iter()
        .map(|n| {
            let (mid, last) = multipliers(n, p, ell);
            let mut v = nums[p2 * n].clone();
            if !mid.is_zero() && !nums[n].is_zero() {
                v += &nums[n] * mid;
            }
            if !last.is_zero() {
                v += &nums[n / p2] * last;
            }
            v
        })
        .collect();
    Ok(QExpansion::from_parts(1, out, s.denominator().clone()))
}

/// `T_{p²} f` in the power basis of the form's field.
pub fn hecke_apply_form(f: &HalfIntegralCuspForm, p: u64) -> Result<Vec<QExpansion>, HeckeError> {
    f.components().iter().map(|c| hecke_apply_series(c, p, f.ell())).collect()
}

/// Exact matrix of `T_{p²}` on a rational basis: column `i` holds the coordinates of
/// `T_{p²} b_i`. Every available coefficient is checked, not only enough to solve.
pub fn hecke_matrix(basis: &[HalfIntegralCuspForm], p: u64) -> Result<Matrix<BigRational>, HeckeError> {
    check_prime(p)?;
    let Some(first) = basis.first() else {
        return Ok(Vec::new());
    };
    let ell = first.ell();
    let n = first.precision();
    let m = output_len(n, p);
    let needed = safety_precision(ell);
    if m < needed {
        return Err(HeckeError::InsufficientPrecision { p, needed: needed * (p * p) as usize, have: n });
    }
    let columns: Vec<Vec<BigRational>> = basis
        .iter()
        .map(|b| (0..m).map(|k| b.coeff_rational(k).expect("rational basis")).collect())
        .collect();
    if rank(&columns) < basis.len() {
        return Err(HeckeError::InsufficientPrecision { p, needed: n * 2, have: n });
    }
    let images: Vec<Result<Vec<BigRational>, HeckeError>> = basis
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let t = hecke_apply_series(&b.components()[0], p, ell)?;
            solve_columns(&columns, &t.coeffs()).ok_or(HeckeError::SolveFailed { p, index: i })
        })
        .collect();
    let cols = images.into_iter().collect::<Result<Vec<_>, _>>()?;
    let d = basis.len();
    Ok((0..d).map(|r| (0..d).map(|c| cols[c][r].clone()).collect()).collect())
}

/// Cusp-space basis expanded far enough for `hecke_matrix` at every prime in `primes`.
pub fn basis_for_primes(ell: u32, primes: &[u64]) -> Result<Vec<HalfIntegralCuspForm>, HeckeError> {
    let pmax = primes.iter().copied().max().ok_or(HeckeError::EmptyPrimeSet)?;
    let n = safety_precision(ell) * (pmax * pmax) as usize;
    Ok(cusp_space_basis(ell, n)?)
}

pub fn hecke_matrices(
    basis: &[HalfIntegralCuspForm],
    primes: &[u64],
) -> Result<BTreeMap<u64, Matrix<BigRational>>, HeckeError> {
    if primes.is_empty() {
        return Err(HeckeError::EmptyPrimeSet);
    }
    primes.iter().map(|&p| Ok((p, hecke_matrix(basis, p)?))).collect()
}

/// Check pairwise commutativity exactly.
pub fn check_commuting(matrices: &BTreeMap<u64, Matrix<BigRational>>) -> Result<(), HeckeError> {
    let keys: Vec<u64> = matrices.keys().copied().collect();
    for (i, &p) in keys.iter().enumerate() {
        for &q in &keys[i + 1..] {
            let (a, b) = (&matrices[&p], &matrices[&q]);
            if a.is_empty() {
                continue;
            }
            if mat_mul(a, b) != mat_mul(b, a) {
                return Err(HeckeError::NotCommuting { p, q });
            }
        }
    }
    Ok(())
}

/// Deligne bound `2p^{(2ℓ−1)/2}`.
pub fn deligne_bound(p: u64, ell: u32) -> f64 {
    2.0 * (p as f64).powf((2 * ell - 1) as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modspace::cusp_space_basis;
    use proptest::prelude::*;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    /// Literal reading of the three-term rule, independent of `multipliers`.
    fn symbolic(h: &[i64], p: i64, ell: u32, n: i64) -> i64 {
        let p2 = p * p;
        let sgn = if ell.is_multiple_of(2) { 1 } else { -1 };
        let leg = {
            let a = (sgn * n).rem_euclid(p);
            if a == 0 {
                0
            } else if (1..p).any(|x| x * x % p == a) {
                1
            } else {
                -1
            }
        };
        let mut v = h[(p2 * n) as usize] + leg * p.pow(ell - 1) * h[n as usize];
        if n % p2 == 0 {
            v += p.pow(2 * ell - 1) * h[(n / p2) as usize];
        }
        v
    }

    proptest! {
        #[test]
        fn matches_symbolic_rule(h in prop::collection::vec(-50i64..50, 300), ell in 4u32..7) {
            for p in [3u64, 5, 7] {
                let input: Vec<BigRational> = h.iter().map(|&x| r(x)).collect();
                let out = hecke_apply(&input, p, ell).unwrap();
                prop_assert_eq!(out.len(), output_len(300, p));
                for (n, v) in out.iter().enumerate() {
                    prop_assert_eq!(v.clone(), r(symbolic(&h, p as i64, ell, n as i64)));
                }
            }
        }
    }

    #[test]
    fn trivial_cases() {
        let zero = vec![r(0); 100];
        assert!(hecke_apply(&zero, 3, 4).unwrap().iter().all(Zero::is_zero));
        let h: Vec<BigRational> = (0..100).map(r).collect();
        let u4 = hecke_apply(&h, 2, 4).unwrap();
        for (n, v) in u4.iter().enumerate() {
            assert_eq!(*v, r(4 * n as i64));
        }
        assert!(matches!(hecke_apply(&h, 9, 4), Err(HeckeError::NotPrime(9))));
    }

    #[test]
    fn series_and_vector_paths_agree() {
        let f = &cusp_space_basis(5, 500).unwrap()[0];
        let coeffs: Vec<BigRational> = (0..500).map(|n| f.coeff_rational(n).unwrap()).collect();
        for p in [2, 3, 5, 7] {
            let a = hecke_apply(&coeffs, p, 5).unwrap();
            let b = hecke_apply_series(&f.components()[0], p, 5).unwrap();
            assert_eq!(a, b.coeffs());
        }
    }

    #[test]
    fn one_dimensional_space_gives_scalar() {
        let basis = basis_for_primes(4, &[3, 5]).unwrap();
        let m = hecke_matrices(&basis, &[3, 5]).unwrap();
        assert_eq!(m[&3], vec![vec![r(12)]]);
        assert_eq!(m[&5], vec![vec![r(-210)]]);
    }

    #[test]
    fn matrices_commute_and_rescaling_preserves_eigenvalues() {
        let basis = basis_for_primes(8, &[3, 5, 7]).unwrap();
        let m = hecke_matrices(&basis, &[3, 5, 7]).unwrap();
        check_commuting(&m).unwrap();
        let p3 = crate::linalg::charpoly(&m[&3]);
        let scaled: Vec<_> = basis
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let c = crate::numfield::FieldScalar::from_int(b.field(), i as i64 + 2);
                b.scaled(&c).unwrap()
            })
            .collect();
        let m3 = hecke_matrix(&scaled, 3).unwrap();
        assert_eq!(crate::linalg::charpoly(&m3), p3);
    }
}
