//! Simultaneous eigenforms of commuting Hecke matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_commuting, hecke_apply_form, output_len, HeckeError};
use crate::linalg::{charpoly, kernel, linear_combination, rref, shifted, FieldElem, Matrix};
use crate::modspace::{first_squarefree_support, HalfIntegralCuspForm};
use crate::numfield::{FieldScalar, NumberField};
use crate::poly::{factor_over_q, isolate_real_roots, QPoly};

#[derive(Clone, Debug)]
pub struct EigenConfig {
    /// Largest eigenvalue-field degree that is solved exactly.
    pub degree_cap: usize,
    /// Seed for the random combination used when the first generator is not separating.
    pub seed: u64,
    /// Attempts at a separating combination before falling back to eigenspace bases.
    pub attempts: usize,
    pub embedding: Embedding,
}

/// Which real root of an irreducible factor the coefficient field is embedded at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Embedding {
    #[default]
    Largest,
    Smallest,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig { degree_cap: 4, seed: 0x1ec4e, attempts: 16, embedding: Embedding::Largest }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SkipReason {
    DegreeCap { degree: usize, cap: usize },
    NoRealEmbedding { degree: usize },
    /// The eigenspace is not a joint eigenspace of the supplied operators.
    NotSimultaneous { dimension: usize },
}

#[derive(Clone, Debug)]
pub struct SkippedFactor {
    pub factor: QPoly,
    pub multiplicity: u32,
    pub reason: SkipReason,
}

/// A Hecke eigenform with exact eigenvalues under a real embedding of its coefficient field.
#[derive(Clone, Debug)]
pub struct HeckeEigenform {
    pub form: HalfIntegralCuspForm,
    pub eigenvalues: BTreeMap<u64, FieldScalar>,
    /// Primes whose operator was tested and does not act by a scalar on this form.
    pub non_eigen_primes: BTreeSet<u64>,
    /// Squarefree index normalized to ĥ(t₀) = 1, or 0 when no such index is in range.
    pub t0: usize,
}

#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenforms: Vec<HeckeEigenform>,
    pub skipped: Vec<SkippedFactor>,
    /// Integer weights `(p, c_p)` of the matrix whose characteristic polynomial was factored.
    pub generator: Vec<(u64, i64)>,
    pub charpoly: QPoly,
}

fn lift(field: &Arc<NumberField>) -> impl Fn(&BigRational) -> FieldScalar + '_ {
    move |x| FieldScalar::from_rational(field, x.clone())
}

fn mat_vec(m: &Matrix<BigRational>, v: &[FieldScalar], field: &Arc<NumberField>) -> Vec<FieldScalar> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(FieldScalar::from_int(field, 0), |acc, (a, x)| acc.add(&x.scale(a)))
        })
        .collect()
}

fn choose_generator(
    matrices: &BTreeMap<u64, Matrix<BigRational>>,
    config: &EigenConfig,
) -> (Vec<(u64, i64)>, Matrix<BigRational>, QPoly) {
    let primes: Vec<u64> = matrices.keys().copied().collect();
    let first = if matrices.contains_key(&3) { 3 } else { primes[0] };
    let mut best = (vec![(first, 1)], matrices[&first].clone());
    let mut cp = charpoly(&best.1);
    if cp.is_squarefree() {
        return (best.0, best.1, cp);
    }
    // random small combinations of the odd-prime operators
    let pool: Vec<u64> = primes.iter().copied().filter(|&p| p != 2).collect();
    let pool = if pool.is_empty() { primes.clone() } else { pool };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.attempts {
        let weights: Vec<(u64, i64)> = pool.iter().map(|&p| (p, rng.random_range(1..=9))).collect();
        let terms: Vec<(BigRational, &Matrix<BigRational>)> = weights
            .iter()
            .map(|&(p, c)| (BigRational::from_integer(c.into()), &matrices[&p]))
            .collect();
        let g = linear_combination(&terms);
        let c = charpoly(&g);
        if c.is_squarefree() {
            return (weights, g, c);
        }
        if factor_over_q(&c).len() > factor_over_q(&cp).len() {
            best = (weights, g);
            cp = c;
        }
    }
    (best.0, best.1, cp)
}

/// Eigenforms of the commuting matrices `matrices` (keyed by prime) acting on the rational
/// `basis`. The characteristic polynomial of a generator matrix is factored over ℚ; each
/// irreducible factor within the degree cap and with a real root yields eigenforms over
/// `ℚ[x]/(factor)` embedded at the real root selected by `config.embedding`.
pub fn eigenforms(
    basis: &[HalfIntegralCuspForm],
    matrices: &BTreeMap<u64, Matrix<BigRational>>,
    config: &EigenConfig,
) -> Result<EigenDecomposition, HeckeError> {
    if matrices.is_empty() {
        return Err(HeckeError::EmptyPrimeSet);
    }
    check_commuting(matrices)?;
    let d = basis.len();
    if d == 0 {
        return Ok(EigenDecomposition { eigenforms: vec![], skipped: vec![], generator: vec![], charpoly: QPoly::one() });
    }
    let (generator, g, cp) = choose_generator(matrices, config);
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (factor, mult) in factor_over_q(&cp) {
        let deg = factor.degree().unwrap();
        if deg > config.degree_cap {
            skipped.push(SkippedFactor { factor, multiplicity: mult, reason: SkipReason::DegreeCap { degree: deg, cap: config.degree_cap } });
            continue;
        }
        let roots = isolate_real_roots(&factor);
        if roots.is_empty() {
            skipped.push(SkippedFactor { factor, multiplicity: mult, reason: SkipReason::NoRealEmbedding { degree: deg } });
            continue;
        }
        let index = match config.embedding {
            Embedding::Largest => roots.len() - 1,
            Embedding::Smallest => 0,
        };
        let field = NumberField::new(&factor, index)?;
        let alpha = FieldScalar::generator(&field);
        let zero = FieldScalar::from_int(&field, 0);
        let shifted_g = shifted(&g, lift(&field), &alpha);
        let space = kernel(&shifted_g, d, &zero);
        if space.len() < mult as usize {
            return Err(HeckeError::NonDiagonalizable { factor: factor.display_in("x"), found: space.len(), multiplicity: mult });
        }
        // eigenvalues of every operator on the eigenspace; must be scalar
        let mut eigenvalues = BTreeMap::new();
        let mut simultaneous = true;
        for (&p, m) in matrices {
            let w = mat_vec(m, &space[0], &field);
            let i = space[0].iter().position(|x| !x.is_zero()).expect("nonzero eigenvector");
            let omega = w[i].mul(&space[0][i].inv().unwrap());
            for v in &space {
                let w = mat_vec(m, v, &field);
                if w.iter().zip(v).any(|(a, b)| *a != b.mul(&omega)) {
                    simultaneous = false;
                }
            }
            eigenvalues.insert(p, omega);
        }
        if !simultaneous {
            skipped.push(SkippedFactor { factor, multiplicity: mult, reason: SkipReason::NotSimultaneous { dimension: space.len() } });
            continue;
        }
        for v in echelon(space) {
            let form = combine(basis, &v, &field)?;
            let (form, t0) = normalize(form)?;
            out.push(HeckeEigenform { form, eigenvalues: eigenvalues.clone(), non_eigen_primes: BTreeSet::new(), t0 });
        }
    }
    Ok(EigenDecomposition { eigenforms: out, skipped, generator, charpoly: cp })
}

fn echelon(space: Vec<Vec<FieldScalar>>) -> Vec<Vec<FieldScalar>> {
    let mut m = space;
    rref(&mut m);
    m
}

/// `Σ v_i b_i` as a form over `field`.
fn combine(basis: &[HalfIntegralCuspForm], v: &[FieldScalar], field: &Arc<NumberField>) -> Result<HalfIntegralCuspForm, HeckeError> {
    let k = basis[0].monomials().len();
    let mut coords = vec![FieldScalar::from_int(field, 0); k];
    for (b, x) in basis.iter().zip(v) {
        let rc = b.rational_coordinates().expect("rational basis");
        for (c, q) in coords.iter_mut().zip(&rc) {
            if !q.is_zero() {
                *c = c.add(&x.scale(q));
            }
        }
    }
    Ok(HalfIntegralCuspForm::from_coordinates(basis[0].ell(), field, coords, basis[0].precision())?)
}

fn normalize(f: HalfIntegralCuspForm) -> Result<(HalfIntegralCuspForm, usize), HeckeError> {
    if let Some(t0) = first_squarefree_support(&f) {
        let s = f.coeff(t0).inverse();
        return Ok((f.scaled(&s)?, t0));
    }
    let lead = f.coordinates().iter().find(|c| !c.is_zero()).expect("nonzero form").inverse();
    Ok((f.scaled(&lead)?, 0))
}

impl HeckeEigenform {
    pub fn ell(&self) -> u32 {
        self.form.ell()
    }

    pub fn field(&self) -> &Arc<NumberField> {
        self.form.field()
    }

    /// Same eigenform expanded to `n` coefficients.
    pub fn expanded(&self, n: usize) -> Result<Self, HeckeError> {
        Ok(HeckeEigenform { form: self.form.expanded(n)?, ..self.clone() })
    }

    /// Check `T_{p²} f = ω_p f` on every coefficient the expansion supports.
    pub fn verify_eigen_identity(&self, p: u64) -> Result<(), HeckeError> {
        let omega = self.eigenvalues.get(&p).ok_or(HeckeError::EigenIdentity { p, n: 0 })?;
        let image = hecke_apply_form(&self.form, p)?;
        let m = output_len(self.form.precision(), p);
        for n in 0..m {
            let lhs = FieldScalar::from_poly(self.field(), QPoly::new(image.iter().map(|c| c.coeff(n)).collect()));
            if lhs != self.form.coeff(n).mul(omega) {
                return Err(HeckeError::EigenIdentity { p, n });
            }
        }
        Ok(())
    }

    /// Add `ω_p` for each prime in `primes` not already known, reading it off `T_{p²}f` at
    /// `t₀` and verifying the eigen-identity on all available coefficients. For `p = 2` a
    /// failed identity records the prime in `non_eigen_primes` instead of erroring.
    pub fn extend_eigenvalues(&mut self, primes: &[u64]) -> Result<(), HeckeError> {
        let t0 = if self.t0 == 0 { 1 } else { self.t0 };
        for &p in primes {
            if self.eigenvalues.contains_key(&p) || self.non_eigen_primes.contains(&p) {
                continue;
            }
            let m = output_len(self.form.precision(), p);
            if m <= t0 {
                return Err(HeckeError::InsufficientPrecision { p, needed: (p * p) as usize * (t0 + 1), have: self.form.precision() });
            }
            let image = hecke_apply_form(&self.form, p)?;
            let at = |n: usize| FieldScalar::from_poly(self.form.field(), QPoly::new(image.iter().map(|c| c.coeff(n)).collect()));
            let h0 = self.form.coeff(t0);
            if h0.is_zero() {
                return Err(HeckeError::EigenIdentity { p, n: t0 });
            }
            let omega = at(t0).mul(&h0.inverse());
            let bad = (0..m).find(|&n| at(n) != self.form.coeff(n).mul(&omega));
            match bad {
                None => {
                    self.eigenvalues.insert(p, omega);
                }
                Some(_) if p == 2 => {
                    self.non_eigen_primes.insert(2);
                }
                Some(n) => return Err(HeckeError::EigenIdentity { p, n }),
            }
        }
        Ok(())
    }
}

/// `(n, λ(n), sign ĥ(n))` for `1 ≤ n < N`; signs are exact.
pub fn lambda_values(f: &HeckeEigenform, n: usize) -> Result<Vec<(usize, f64, i8)>, HeckeError> {
    let form = if f.form.precision() < n { f.form.expanded(n)? } else { f.form.clone() };
    (1..n)
        .map(|k| Ok((k, form.lambda(k), form.coeff_sign(k)?)))
        .collect()
}

/// Largest relative gap between each stored ω_p and the nearest eigenvalue of the
/// float matrix, over all primes with a matrix.
pub fn numeric_eigenvalue_deviation(f: &HeckeEigenform, matrices: &BTreeMap<u64, Matrix<BigRational>>) -> f64 {
    let mut worst: f64 = 0.0;
    for (p, m) in matrices {
        let Some(omega) = f.eigenvalues.get(p) else { continue };
        let d = m.len();
        let fm = DMatrix::from_fn(d, d, |i, j| m[i][j].to_f64().unwrap_or(f64::NAN));
        let w = omega.to_f64();
        let gap = fm
            .complex_eigenvalues()
            .iter()
            .map(|z| ((z.re - w).powi(2) + z.im.powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(gap / w.abs().max(1.0));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hecke::{basis_for_primes, hecke_matrices};

    fn decompose(ell: u32) -> (EigenDecomposition, BTreeMap<u64, Matrix<BigRational>>) {
        let basis = basis_for_primes(ell, &[3, 5, 7]).unwrap();
        let m = hecke_matrices(&basis, &[3, 5, 7]).unwrap();
        (eigenforms(&basis, &m, &EigenConfig::default()).unwrap(), m)
    }

    #[test]
    fn weight_nine_halves_eigenform() {
        let (dec, m) = decompose(4);
        assert_eq!(dec.eigenforms.len(), 1);
        let f = &dec.eigenforms[0];
        assert_eq!(f.t0, 1);
        assert_eq!(f.eigenvalues[&3].as_rational(), Some(BigRational::from_integer(12.into())));
        assert_eq!(f.eigenvalues[&5].as_rational(), Some(BigRational::from_integer((-210).into())));
        for p in [3, 5, 7] {
            f.verify_eigen_identity(p).unwrap();
        }
        assert!(numeric_eigenvalue_deviation(f, &m) < 1e-8);
    }

    #[test]
    fn every_weight_decomposes() {
        for ell in 4..=10 {
            let (dec, m) = decompose(ell);
            let count: usize = dec.eigenforms.len()
                + dec.skipped.iter().map(|s| s.factor.degree().unwrap() * s.multiplicity as usize).sum::<usize>();
            assert!(count >= 1, "ℓ={ell}");
            for f in &dec.eigenforms {
                for p in [3, 5, 7] {
                    f.verify_eigen_identity(p).unwrap();
                }
                assert!(numeric_eigenvalue_deviation(f, &m) < 1e-8, "ℓ={ell}");
                assert!(f.form.field().interval().lo <= f.form.field().interval().hi);
            }
        }
    }

    #[test]
    fn extended_eigenvalues_agree_with_matrices() {
        let (dec, _) = decompose(4);
        let mut f = dec.eigenforms[0].expanded(49 * 40).unwrap();
        let known = f.eigenvalues.clone();
        f.eigenvalues.clear();
        f.extend_eigenvalues(&[2, 3, 5, 7, 11]).unwrap();
        for (p, w) in known {
            assert_eq!(f.eigenvalues[&p], w);
        }
        // ω₂ of the level-2 newform is −2^{ℓ−1}·(±1)
        let w2 = f.eigenvalues[&2].as_rational().unwrap();
        assert_eq!(num_traits::Signed::abs(&w2), BigRational::from_integer(8.into()));
    }

    #[test]
    fn lambda_signs_agree_with_coefficients() {
        let (dec, _) = decompose(6);
        for f in &dec.eigenforms {
            for (n, lam, s) in lambda_values(f, 300).unwrap() {
                let expected = if lam > 0.0 { 1 } else if lam < 0.0 { -1 } else { 0 };
                assert_eq!(s, expected, "n={n}");
            }
        }
    }
}
