//! The cusp space S_{ℓ+1/2}(Γ₀(4)) as exact polynomials in θ and F.

mod cache;
pub mod cusps;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{kernel, rank, rref, Matrix};
use crate::numfield::{FieldScalar, NumFieldError, NumberField};
use crate::poly::QPoly;
use crate::qseries::{f2_expansion, theta_expansion, QExpansion};

pub use cache::{basis_checksum, load_basis, save_basis, BasisCacheFile};
pub use cusps::{build_cusp_expansion_table, Cusp, CuspEntry, CuspExpansionTable, Generator};

#[derive(Debug, Error)]
pub enum ModspaceError {
    #[error("weight parameter ℓ = {0} is below 4; the cusp space is zero")]
    EllTooSmall(u32),
    #[error("precision {requested} is below the required minimum {minimum}")]
    PrecisionTooSmall { requested: usize, minimum: usize },
    #[error("cusp table entry for {generator} at cusp {cusp} failed validation: {detail}")]
    CuspValidation { generator: String, cusp: &'static str, detail: String },
    #[error("cusp conditions mix automorphy constants that are not ±1 relative to each other at cusp {0}")]
    NonRealCondition(&'static str),
    #[error("cusp-space dimension unstable: {dim_low} at precision {low}, {dim_high} at {high}, {expected} from the conditions")]
    RankUnstable { low: usize, dim_low: usize, high: usize, dim_high: usize, expected: usize },
    #[error("basis cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Field(#[from] NumFieldError),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
}

/// `θ^a F^j`, of weight `a/2 + 2j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormMonomial {
    pub a: u32,
    pub j: u32,
}

impl FormMonomial {
    /// Twice the weight, `a + 4j`.
    pub fn twice_weight(&self) -> u32 {
        self.a + 4 * self.j
    }

    pub fn weight(&self) -> f64 {
        self.twice_weight() as f64 / 2.0
    }
}

/// Largest supported precision for one expansion.
pub const MAX_PRECISION: usize = 1 << 22;

/// All `θ^a F^j` of weight `ℓ + 1/2`, by increasing `j`.
pub fn monomial_basis(ell: u32) -> Result<Vec<FormMonomial>, ModspaceError> {
    if ell < 4 {
        return Err(ModspaceError::EllTooSmall(ell));
    }
    let top = 2 * ell + 1;
    Ok((0..=top / 4).map(|j| FormMonomial { a: top - 4 * j, j }).collect())
}

/// Minimum number of rows used for kernel and rank computations at weight `ℓ + 1/2`.
pub fn safety_precision(ell: u32) -> usize {
    8 * (ell as usize + 1)
}

type PowerCache = Mutex<HashMap<(Generator, u32), Arc<QExpansion>>>;

fn power_cache() -> &'static PowerCache {
    static CACHE: OnceLock<PowerCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn monomial_cache() -> &'static Mutex<HashMap<FormMonomial, Arc<QExpansion>>> {
    static CACHE: OnceLock<Mutex<HashMap<FormMonomial, Arc<QExpansion>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn generator_power(g: Generator, k: u32, n: usize) -> QExpansion {
    if let Some(hit) = power_cache().lock().unwrap().get(&(g, k)) {
        if hit.precision() >= n {
            return hit.truncate(n);
        }
    }
    let base = match g {
        Generator::Theta => theta_expansion(n),
        Generator::F => f2_expansion(n),
    };
    let value = base.pow(k);
    let mut cache = power_cache().lock().unwrap();
    let slot = cache.entry((g, k)).or_insert_with(|| Arc::new(value.clone()));
    if slot.precision() < n {
        *slot = Arc::new(value.clone());
    }
    value
}

/// Exact expansion of a monomial at ∞ to `n` coefficients; results are memoized.
pub fn monomial_expansion(m: FormMonomial, n: usize) -> QExpansion {
    if let Some(hit) = monomial_cache().lock().unwrap().get(&m) {
        if hit.precision() >= n {
            return hit.truncate(n);
        }
    }
    let value = match (m.a, m.j) {
        (a, 0) => generator_power(Generator::Theta, a, n),
        (0, j) => generator_power(Generator::F, j, n),
        (a, j) => generator_power(Generator::Theta, a, n).mul(&generator_power(Generator::F, j, n)),
    };
    let mut cache = monomial_cache().lock().unwrap();
    let slot = cache.entry(m).or_insert_with(|| Arc::new(value.clone()));
    if slot.precision() < n {
        *slot = Arc::new(value.clone());
    }
    value
}

fn monomial_expansions(monos: &[FormMonomial], n: usize) -> Vec<QExpansion> {
    monos.par_iter().map(|&m| monomial_expansion(m, n)).collect()
}

/// A cusp form of weight `ℓ + 1/2` given by exact coordinates on the monomial basis, with
/// a cached q-expansion. Coordinates live in a real number field `K`; the expansion is
/// stored in the power basis of `K`, one rational series per power of the generator.
#[derive(Clone, Debug)]
pub struct HalfIntegralCuspForm {
    ell: u32,
    monomials: Vec<FormMonomial>,
    field: Arc<NumberField>,
    coords: Vec<FieldScalar>,
    components: Vec<QExpansion>,
}

impl HalfIntegralCuspForm {
    /// Form with the given coordinates, expanded to `n` coefficients.
    pub fn from_coordinates(
        ell: u32,
        field: &Arc<NumberField>,
        coords: Vec<FieldScalar>,
        n: usize,
    ) -> Result<Self, ModspaceError> {
        let monomials = monomial_basis(ell)?;
        assert_eq!(coords.len(), monomials.len(), "one coordinate per monomial");
        let mut f = HalfIntegralCuspForm {
            ell,
            monomials,
            field: field.clone(),
            coords,
            components: Vec::new(),
        };
        f.components = f.expand_components(n)?;
        Ok(f)
    }

    /// Rational form from rational coordinates.
    pub fn from_rational_coordinates(ell: u32, coords: &[BigRational], n: usize) -> Result<Self, ModspaceError> {
        let q = NumberField::rationals();
        let c = coords.iter().map(|x| FieldScalar::from_rational(&q, x.clone())).collect();
        Self::from_coordinates(ell, &q, c, n)
    }

    fn expand_components(&self, n: usize) -> Result<Vec<QExpansion>, ModspaceError> {
        if n > MAX_PRECISION {
            return Err(ModspaceError::ResourceLimit(format!("precision {n} exceeds {MAX_PRECISION}")));
        }
        let exps = monomial_expansions(&self.monomials, n);
        let d = self.field.degree();
        let coeff_tables: Vec<Vec<BigRational>> = self.coords.iter().map(FieldScalar::coefficients).collect();
        Ok((0..d)
            .into_par_iter()
            .map(|i| {
                let mut acc = QExpansion::zero(1, n);
                for (e, c) in exps.iter().zip(&coeff_tables) {
                    if !c[i].is_zero() {
                        acc = acc.add(&e.scale(&c[i]));
                    }
                }
                acc
            })
            .collect())
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn monomials(&self) -> &[FormMonomial] {
        &self.monomials
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn coordinates(&self) -> &[FieldScalar] {
        &self.coords
    }

    /// Rational coordinates, if the form is defined over ℚ.
    pub fn rational_coordinates(&self) -> Option<Vec<BigRational>> {
        if self.field.degree() != 1 {
            return None;
        }
        self.coords.iter().map(FieldScalar::as_rational).collect()
    }

    pub fn is_rational(&self) -> bool {
        self.field.degree() == 1
    }

    /// Number of cached coefficients ĥ(0..N).
    pub fn precision(&self) -> usize {
        self.components[0].precision()
    }

    /// Power-basis components of the cached expansion.
    pub fn components(&self) -> &[QExpansion] {
        &self.components
    }

    pub fn coeff(&self, n: usize) -> FieldScalar {
        let p = QPoly::new(self.components.iter().map(|c| c.coeff(n)).collect());
        FieldScalar::from_poly(&self.field, p)
    }

    /// ĥ(n) as an exact rational, for forms over ℚ.
    pub fn coeff_rational(&self, n: usize) -> Option<BigRational> {
        self.is_rational().then(|| self.components[0].coeff(n))
    }

    pub fn coeff_sign(&self, n: usize) -> Result<i8, NumFieldError> {
        if self.is_rational() {
            return Ok(self.components[0].coeff_sign(n));
        }
        self.coeff(n).sign()
    }

    pub fn coeff_f64(&self, n: usize) -> f64 {
        if self.is_rational() {
            return self.components[0].coeff_f64(n);
        }
        self.coeff(n).to_f64()
    }

    /// Normalized coefficient `λ(n) = ĥ(n) / n^{ℓ/2 − 1/4}`.
    pub fn lambda(&self, n: usize) -> f64 {
        self.coeff_f64(n) / lambda_normalizer(self.ell, n as u64)
    }

    /// Same coordinates, expansion recomputed to `n` coefficients.
    pub fn expanded(&self, n: usize) -> Result<Self, ModspaceError> {
        if n <= self.precision() {
            let mut f = self.clone();
            f.components = f.components.iter().map(|c| c.truncate(n)).collect();
            return Ok(f);
        }
        let mut f = self.clone();
        f.components = f.expand_components(n)?;
        Ok(f)
    }

    /// `c · self`.
    pub fn scaled(&self, c: &FieldScalar) -> Result<Self, ModspaceError> {
        let coords = self.coords.iter().map(|x| x.mul(c)).collect();
        Self::from_coordinates(self.ell, &self.field, coords, self.precision())
    }

    /// Exact series `Σ_m c_m·(θ^a F^j | σ_c)` per power-basis component, plus the common
    /// root-of-unity index. Monomials must be ±1 multiples of each other at every cusp.
    pub fn at_cusp(&self, table: &CuspExpansionTable, c: Cusp) -> Result<(u8, Vec<QExpansion>), ModspaceError> {
        let parts: Vec<(u8, QExpansion)> = self.monomials.iter().map(|&m| table.monomial(m, c)).collect();
        let base = parts[0].0;
        let n = table.precision();
        let d = self.field.degree();
        let mut comps = vec![QExpansion::zero(cusps::CUSP_WIDTH, n); d];
        for ((root, e), coord) in parts.iter().zip(&self.coords) {
            let sign = match (8 + root - base) % 8 {
                0 => BigRational::from_integer(1.into()),
                4 => BigRational::from_integer((-1).into()),
                _ => return Err(ModspaceError::NonRealCondition(c.label())),
            };
            for (i, x) in coord.coefficients().iter().enumerate() {
                if !x.is_zero() {
                    comps[i] = comps[i].add(&e.scale(&(x * &sign)));
                }
            }
        }
        Ok((base, comps))
    }

    /// Exact constant term of the expansion at each cusp (all zero for a cusp form).
    pub fn cusp_constant_terms(&self, table: &CuspExpansionTable) -> Result<Vec<(Cusp, FieldScalar)>, ModspaceError> {
        Cusp::ALL
            .iter()
            .map(|&c| {
                let (_, comps) = self.at_cusp(table, c)?;
                let p = QPoly::new(comps.iter().map(|s| s.coeff(0)).collect());
                Ok((c, FieldScalar::from_poly(&self.field, p)))
            })
            .collect()
    }

    /// `|f|σ_c(iY)|` evaluated from the exact cusp expansion.
    pub fn abs_at_cusp(&self, table: &CuspExpansionTable, c: Cusp, y: f64) -> Result<f64, ModspaceError> {
        let (root, comps) = self.at_cusp(table, c)?;
        let alpha = self.field.approx_root();
        let z = Complex64::new(0.0, y);
        let v: Complex64 = comps
            .iter()
            .enumerate()
            .map(|(i, s)| s.eval(z) * alpha.powi(i as i32))
            .sum();
        Ok((v * cusps::root_of_unity(root)).norm())
    }

    /// `|f|σ_c(5i)| / |f|σ_c(10i)|` for `c ∈ {0, −1/2}`.
    pub fn cusp_decay_ratios(&self, table: &CuspExpansionTable) -> Result<Vec<(Cusp, f64)>, ModspaceError> {
        [Cusp::Zero, Cusp::MinusHalf]
            .into_iter()
            .map(|c| Ok((c, self.abs_at_cusp(table, c, 5.0)? / self.abs_at_cusp(table, c, 10.0)?)))
            .collect()
    }
}

/// `n^{ℓ/2 − 1/4}`.
pub fn lambda_normalizer(ell: u32, n: u64) -> f64 {
    (n as f64).powf(ell as f64 / 2.0 - 0.25)
}

/// Shared validated cusp table used for cusp conditions.
pub fn default_cusp_table() -> Result<&'static CuspExpansionTable, ModspaceError> {
    static TABLE: OnceLock<CuspExpansionTable> = OnceLock::new();
    if let Some(t) = TABLE.get() {
        return Ok(t);
    }
    let t = build_cusp_expansion_table(64)?;
    Ok(TABLE.get_or_init(|| t))
}

/// Rational matrix of cusp conditions: one row per cusp and nonpositive exponent, one
/// column per monomial.
pub fn condition_matrix(ell: u32, table: &CuspExpansionTable) -> Result<Matrix<BigRational>, ModspaceError> {
    let monos = monomial_basis(ell)?;
    let mut rows = Vec::new();
    for c in Cusp::ALL {
        let parts: Vec<(u8, QExpansion)> = monos.iter().map(|&m| table.monomial(m, c)).collect();
        let base = parts[0].0;
        let mut row = Vec::with_capacity(monos.len());
        for (root, e) in &parts {
            let v = e.coeff(0);
            row.push(match (8 + root - base) % 8 {
                0 => v,
                4 => -v,
                _ if v.is_zero() => v,
                _ => return Err(ModspaceError::NonRealCondition(c.label())),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

fn coefficient_rows(forms: &[Vec<BigRational>], exps: &[QExpansion], n: usize) -> Matrix<BigRational> {
    forms
        .par_iter()
        .map(|coords| {
            let mut acc = QExpansion::zero(1, n);
            for (e, c) in exps.iter().zip(coords) {
                if !c.is_zero() {
                    acc = acc.add(&e.truncate(n).scale(c));
                }
            }
            acc.coeffs()
        })
        .collect()
}

/// Exact basis of S_{ℓ+1/2}(Γ₀(4)) expanded to `n ≥ 8(ℓ+1)` coefficients, in echelon form:
/// the `i`-th form has ĥ = 1 at its pivot index and ĥ = 0 at the other forms' pivots.
pub fn cusp_space_basis(ell: u32, n: usize) -> Result<Vec<HalfIntegralCuspForm>, ModspaceError> {
    let monos = monomial_basis(ell)?;
    let minimum = safety_precision(ell);
    if n < minimum {
        return Err(ModspaceError::PrecisionTooSmall { requested: n, minimum });
    }
    let table = default_cusp_table()?;
    let cond = condition_matrix(ell, table)?;
    let ker = kernel(&cond, monos.len(), &BigRational::zero());
    let expected = ker.len();
    let exps = monomial_expansions(&monos, 2 * n);
    let low = coefficient_rows(&ker, &exps, n);
    let high = coefficient_rows(&ker, &exps, 2 * n);
    let (dim_low, dim_high) = (rank(&low), rank(&high));
    if dim_low != expected || dim_high != expected {
        return Err(ModspaceError::RankUnstable { low: n, dim_low, high: 2 * n, dim_high, expected });
    }
    // echelonize [coefficients | coordinates] on the coefficient block
    let mut aug: Matrix<BigRational> = low
        .into_iter()
        .zip(&ker)
        .map(|(mut row, coords)| {
            row.extend(coords.iter().cloned());
            row
        })
        .collect();
    rref(&mut aug);
    aug.into_iter()
        .map(|row| HalfIntegralCuspForm::from_rational_coordinates(ell, &row[n..], n))
        .collect()
}

/// Expansion of `f` to `n` coefficients.
pub fn expand_form(f: &HalfIntegralCuspForm, n: usize) -> Result<HalfIntegralCuspForm, ModspaceError> {
    f.expanded(n)
}

/// Index of the first nonzero coefficient at a squarefree index `≥ 1`.
pub fn first_squarefree_support(f: &HalfIntegralCuspForm) -> Option<usize> {
    (1..f.precision()).find(|&t| crate::arith::is_squarefree_int(t as i64) && !f.coeff(t).is_zero())
}

/// Dimension predicted by the dimension formula of S_{2ℓ}(Γ₀(2)), used as a cross-check.
pub fn expected_dimension(ell: u32) -> usize {
    (ell as usize / 2).saturating_sub(1)
}

/// ĥ(n) of a rational form as a big integer numerator over the expansion denominator.
pub fn integral_coefficients(f: &HalfIntegralCuspForm) -> Option<(Vec<BigInt>, BigInt)> {
    f.is_rational().then(|| (f.components[0].numerators().to_vec(), f.components[0].denominator().clone()))
}

/// f64 view of the λ-values of a rational form, `λ(1..N)`; index 0 is unused.
pub fn lambda_vector(f: &HalfIntegralCuspForm) -> Vec<f64> {
    let den = f.components[0].denominator().to_f64().unwrap_or(f64::NAN);
    let nums = f.components[0].numerators();
    (0..f.precision())
        .map(|n| {
            if n == 0 {
                0.0
            } else if f.is_rational() {
                nums[n].to_f64().unwrap_or(f64::NAN) / den / lambda_normalizer(f.ell, n as u64)
            } else {
                f.lambda(n)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn monomial_lists() {
        let m4 = monomial_basis(4).unwrap();
        assert_eq!(m4, vec![FormMonomial { a: 9, j: 0 }, FormMonomial { a: 5, j: 1 }, FormMonomial { a: 1, j: 2 }]);
        let m5 = monomial_basis(5).unwrap();
        assert_eq!(m5.iter().map(|m| (m.a, m.j)).collect::<Vec<_>>(), vec![(11, 0), (7, 1), (3, 2)]);
        assert_eq!(monomial_basis(7).unwrap().len(), 4);
        assert!(matches!(monomial_basis(3), Err(ModspaceError::EllTooSmall(3))));
        for ell in 4..12 {
            for m in monomial_basis(ell).unwrap() {
                assert_eq!(m.twice_weight(), 2 * ell + 1);
            }
        }
    }

    #[test]
    fn dimensions_match_integral_weight_counterpart() {
        for ell in 4..=10 {
            let b = cusp_space_basis(ell, safety_precision(ell)).unwrap();
            assert_eq!(b.len(), expected_dimension(ell), "ℓ = {ell}");
        }
    }

    #[test]
    fn weight_nine_halves_generator() {
        let b = cusp_space_basis(4, 40).unwrap();
        assert_eq!(b.len(), 1);
        let f = &b[0];
        assert_eq!(f.coeff_rational(0), Some(BigRational::zero()));
        assert_eq!(f.coeff_rational(1), Some(BigRational::one()));
        // θ^5·F − 16·θ·F²
        let coords = f.rational_coordinates().unwrap();
        assert_eq!(coords, vec![r(0), r(1), r(-16)]);
        assert_eq!(f.coeff_rational(2), Some(r(-6)));
    }

    #[test]
    fn basis_forms_vanish_at_every_cusp() {
        let table = default_cusp_table().unwrap();
        for ell in [4, 6, 9] {
            for f in cusp_space_basis(ell, safety_precision(ell)).unwrap() {
                for (c, v) in f.cusp_constant_terms(table).unwrap() {
                    assert!(v.is_zero(), "ℓ={ell} cusp {c:?}");
                }
                for (c, ratio) in f.cusp_decay_ratios(table).unwrap() {
                    assert!(ratio >= 10.0, "ℓ={ell} cusp {c:?} ratio {ratio}");
                }
            }
        }
    }

    #[test]
    fn expansion_is_consistent_across_precisions_and_linear() {
        let f = &cusp_space_basis(4, 40).unwrap()[0];
        let g = expand_form(f, 120).unwrap();
        for n in 0..40 {
            assert_eq!(f.coeff(n), g.coeff(n));
        }
        let two = FieldScalar::from_int(f.field(), 2);
        let h = f.scaled(&two).unwrap();
        for n in 0..40 {
            assert_eq!(h.coeff(n), f.coeff(n).mul(&two));
        }
        let z = HalfIntegralCuspForm::from_rational_coordinates(4, &[r(0), r(0), r(0)], 30).unwrap();
        assert!((0..30).all(|n| z.coeff(n).is_zero()));
    }

    #[test]
    fn lambda_reproduces_coefficients() {
        let f = expand_form(&cusp_space_basis(4, 40).unwrap()[0], 500).unwrap();
        let lv = lambda_vector(&f);
        for n in 1..500 {
            let h = f.coeff_f64(n);
            let back = lv[n] * lambda_normalizer(4, n as u64);
            assert!((back - h).abs() <= 1e-12 * h.abs().max(1.0));
            assert_eq!(f.coeff_sign(n).unwrap(), if h > 0.0 { 1 } else if h < 0.0 { -1 } else { 0 });
        }
    }

    #[test]
    fn precision_floor_enforced() {
        assert!(matches!(cusp_space_basis(4, 20), Err(ModspaceError::PrecisionTooSmall { .. })));
    }
}
