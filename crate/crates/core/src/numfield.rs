//! Real-embedded number fields `ℚ[x]/(m)` and their elements.

use std::fmt;
use std::sync::{Arc, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::poly::{is_irreducible, isolate_real_roots, QPoly, RootInterval};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumFieldError {
    #[error("minimal polynomial {0} is not monic irreducible of positive degree")]
    NotIrreducible(String),
    #[error("root index {index} out of range: {count} real roots")]
    NoSuchRoot { index: usize, count: usize },
    #[error("interval [{lo}, {hi}] does not isolate a real root of {poly}")]
    BadInterval { poly: String, lo: String, hi: String },
    #[error("sign undecided after refining the embedding to width 2^-{0}")]
    SignUndecided(u32),
}

/// Initial isolation width, as a power of two.
const START_BITS: u32 = 128;
/// Refinement cap for sign decisions; far beyond the 10^-40 working threshold.
const MAX_BITS: u32 = 4096;

/// `ℚ(α)` with `α` a chosen real root of a monic irreducible polynomial.
pub struct NumberField {
    minpoly: QPoly,
    root: RwLock<RootInterval>,
}

impl fmt::Debug for NumberField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NumberField({}, α≈{})", self.minpoly.display_in("x"), self.approx_root())
    }
}

impl PartialEq for NumberField {
    fn eq(&self, other: &Self) -> bool {
        self.minpoly == other.minpoly && {
            let a = self.interval();
            let b = other.interval();
            a.lo <= b.hi && b.lo <= a.hi
        }
    }
}

fn dyadic(bits: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << bits)
}

impl NumberField {
    /// The field ℚ itself, presented as `ℚ[x]/(x)`.
    pub fn rationals() -> Arc<Self> {
        Arc::new(NumberField {
            minpoly: QPoly::x(),
            root: RwLock::new(RootInterval { lo: BigRational::zero(), hi: BigRational::zero() }),
        })
    }

    /// Field generated by the `index`-th real root (in increasing order) of `minpoly`.
    pub fn new(minpoly: &QPoly, index: usize) -> Result<Arc<Self>, NumFieldError> {
        let m = minpoly.monic();
        if m.degree().unwrap_or(0) == 0 || !is_irreducible(&m) {
            return Err(NumFieldError::NotIrreducible(minpoly.display_in("x")));
        }
        let roots = isolate_real_roots(&m);
        let count = roots.len();
        let mut iv = roots.into_iter().nth(index).ok_or(NumFieldError::NoSuchRoot { index, count })?;
        iv.refine_to(&m, &dyadic(START_BITS));
        Ok(Arc::new(NumberField { minpoly: m, root: RwLock::new(iv) }))
    }

    /// Field from a stored isolating interval; verifies that it isolates exactly one root.
    pub fn from_interval(minpoly: &QPoly, iv: RootInterval) -> Result<Arc<Self>, NumFieldError> {
        let m = minpoly.monic();
        if m.degree().unwrap_or(0) == 0 || !is_irreducible(&m) {
            return Err(NumFieldError::NotIrreducible(minpoly.display_in("x")));
        }
        let bad = || NumFieldError::BadInterval {
            poly: m.display_in("x"),
            lo: iv.lo.to_string(),
            hi: iv.hi.to_string(),
        };
        if iv.lo == iv.hi {
            if !m.eval(&iv.lo).is_zero() {
                return Err(bad());
            }
        } else {
            let a = m.eval(&iv.lo);
            let b = m.eval(&iv.hi);
            if iv.lo > iv.hi || a.is_zero() || b.is_zero() || a.is_positive() == b.is_positive() {
                return Err(bad());
            }
            let inside = isolate_real_roots(&m)
                .into_iter()
                .filter(|r| {
                    let mut r = r.clone();
                    while !(r.hi < iv.lo || r.lo > iv.hi || iv.contains(&r)) {
                        r.bisect(&m);
                    }
                    iv.contains(&r)
                })
                .count();
            if inside != 1 {
                return Err(bad());
            }
        }
        Ok(Arc::new(NumberField { minpoly: m, root: RwLock::new(iv) }))
    }

    pub fn degree(&self) -> usize {
        self.minpoly.degree().unwrap()
    }

    pub fn minpoly(&self) -> &QPoly {
        &self.minpoly
    }

    pub fn interval(&self) -> RootInterval {
        self.root.read().unwrap().clone()
    }

    pub fn approx_root(&self) -> f64 {
        self.interval().approx()
    }

    fn refine_below(&self, bits: u32) {
        let target = dyadic(bits);
        let mut iv = self.root.write().unwrap();
        iv.refine_to(&self.minpoly, &target);
    }

    /// `(g(mid), r)` with `|g(α) − g(mid)| ≤ r` on the current isolating interval.
    fn enclose(&self, g: &[BigRational]) -> (BigRational, BigRational) {
        let iv = self.interval();
        let mid = iv.midpoint();
        let rad = iv.width() / BigRational::from_integer(2.into());
        let val = QPoly::new(g.to_vec()).eval(&mid);
        if rad.is_zero() {
            return (val, rad);
        }
        // |g(x) − g(m)| ≤ Σ_{i≥1} |c_i|·((|m|+r)^i − |m|^i)
        let am = mid.abs();
        let outer = &am + &rad;
        let mut err = BigRational::zero();
        let mut pm = BigRational::one();
        let mut po = BigRational::one();
        for c in g.iter().skip(1) {
            pm *= &am;
            po *= &outer;
            if !c.is_zero() {
                err += c.abs() * (&po - &pm);
            }
        }
        (val, err)
    }
}

/// Element of a [`NumberField`], as a rational polynomial in `α` of degree below `[K:ℚ]`.
#[derive(Clone)]
pub struct FieldScalar {
    field: Arc<NumberField>,
    coeffs: Vec<BigRational>,
}

impl fmt::Debug for FieldScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display())
    }
}

impl PartialEq for FieldScalar {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl FieldScalar {
    pub fn from_rational(field: &Arc<NumberField>, q: BigRational) -> Self {
        Self::from_poly(field, QPoly::constant(q))
    }

    pub fn from_int(field: &Arc<NumberField>, n: i64) -> Self {
        Self::from_rational(field, BigRational::from_integer(n.into()))
    }

    /// The generator `α`.
    pub fn generator(field: &Arc<NumberField>) -> Self {
        Self::from_poly(field, QPoly::x())
    }

    pub fn from_poly(field: &Arc<NumberField>, p: QPoly) -> Self {
        let r = if p.degree().is_some_and(|d| d >= field.degree()) { p.rem(&field.minpoly) } else { p };
        FieldScalar { field: field.clone(), coeffs: r.coeffs().to_vec() }
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    /// Coefficients in the power basis `1, α, α², …`, padded to the field degree.
    pub fn coefficients(&self) -> Vec<BigRational> {
        let mut c = self.coeffs.clone();
        c.resize(self.field.degree(), BigRational::zero());
        c
    }

    pub fn as_poly(&self) -> QPoly {
        QPoly::new(self.coeffs.clone())
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        match self.coeffs.len() {
            0 => Some(BigRational::zero()),
            1 => Some(self.coeffs[0].clone()),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, o: &Self) -> Self {
        self.wrap(self.as_poly().add(&o.as_poly()))
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.wrap(self.as_poly().sub(&o.as_poly()))
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.coeffs.len() <= 1 || o.coeffs.len() <= 1 {
            return self.wrap(self.as_poly().mul(&o.as_poly()));
        }
        self.wrap(self.as_poly().mul(&o.as_poly()).rem(&self.field.minpoly))
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        self.wrap(self.as_poly().scale(q))
    }

    pub fn neg(&self) -> Self {
        self.wrap(self.as_poly().neg())
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        if let Some(q) = self.as_rational() {
            return Some(self.wrap(QPoly::constant(q.recip())));
        }
        let (g, s, _) = self.as_poly().ext_gcd(&self.field.minpoly);
        debug_assert_eq!(g, QPoly::one());
        Some(Self::from_poly(&self.field, s))
    }

    fn wrap(&self, p: QPoly) -> Self {
        FieldScalar { field: self.field.clone(), coeffs: p.coeffs().to_vec() }
    }

    /// Exact sign under the real embedding.
    pub fn sign(&self) -> Result<i8, NumFieldError> {
        if let Some(q) = self.as_rational() {
            return Ok(if q.is_zero() { 0 } else if q.is_positive() { 1 } else { -1 });
        }
        let mut bits = START_BITS;
        loop {
            let (val, err) = self.field.enclose(&self.coeffs);
            if val.abs() > err {
                return Ok(if val.is_positive() { 1 } else { -1 });
            }
            if bits >= MAX_BITS {
                return Err(NumFieldError::SignUndecided(bits));
            }
            bits *= 2;
            self.field.refine_below(bits);
        }
    }

    /// Real embedding with relative error below `1e-13`.
    pub fn to_f64(&self) -> f64 {
        if let Some(q) = self.as_rational() {
            return q.to_f64().unwrap_or(f64::NAN);
        }
        let mut bits = START_BITS;
        loop {
            let (val, err) = self.field.enclose(&self.coeffs);
            let tol = val.abs() * BigRational::new(1.into(), BigInt::from(10).pow(13));
            if err <= tol || bits >= MAX_BITS {
                return val.to_f64().unwrap_or(f64::NAN);
            }
            bits *= 2;
            self.field.refine_below(bits);
        }
    }

    pub fn display(&self) -> String {
        QPoly::new(self.coeffs.clone()).display_in("a")
    }
}
