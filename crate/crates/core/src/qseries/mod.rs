//! Exact truncated q-expansions.
//!
//! A [`QExpansion`] is a power series in `q^{1/w}` (`w ∈ {1, 2, 4}`) stored as a vector of
//! big-integer numerators over one positive common denominator. Coefficient `k` is the
//! coefficient of `q^{k/w}`; a series of length `N` is valid below exponent `N/w`.

mod ntt;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::sigma1_table;

pub const VALID_WIDTHS: [u32; 3] = [1, 2, 4];

/// Below this many coefficients the dense product is computed by schoolbook summation.
const SCHOOLBOOK_CUTOFF: usize = 48;

#[derive(Clone, PartialEq, Eq)]
pub struct QExpansion {
    width: u32,
    den: BigInt,
    nums: Vec<BigInt>,
}

impl fmt::Debug for QExpansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shown: Vec<String> = (0..self.nums.len().min(12)).map(|k| self.coeff(k).to_string()).collect();
        write!(f, "QExpansion(w={}, N={}, [{}{}])", self.width, self.nums.len(), shown.join(", "),
            if self.nums.len() > 12 { ", …" } else { "" })
    }
}

fn check_width(width: u32) {
    assert!(VALID_WIDTHS.contains(&width), "q-expansion width must be 1, 2 or 4, got {width}");
}

impl QExpansion {
    /// Integer series; panics on a width outside `{1, 2, 4}`.
    pub fn from_integers(width: u32, nums: Vec<BigInt>) -> Self {
        check_width(width);
        QExpansion { width, den: BigInt::one(), nums }
    }

    pub fn from_i64s(width: u32, coeffs: &[i64]) -> Self {
        Self::from_integers(width, coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn from_rationals(width: u32, coeffs: &[BigRational]) -> Self {
        check_width(width);
        let den = coeffs.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let nums = coeffs.iter().map(|c| c.numer() * (&den / c.denom())).collect();
        Self::from_parts(width, nums, den)
    }

    /// `nums / den`, normalized.
    pub fn from_parts(width: u32, nums: Vec<BigInt>, den: BigInt) -> Self {
        check_width(width);
        assert!(!den.is_zero(), "zero denominator");
        let mut s = QExpansion { width, den, nums };
        s.normalize();
        s
    }

    pub fn zero(width: u32, precision: usize) -> Self {
        Self::from_integers(width, vec![BigInt::zero(); precision])
    }

    pub fn one(width: u32, precision: usize) -> Self {
        let mut s = Self::zero(width, precision);
        if precision > 0 {
            s.nums[0] = BigInt::one();
        }
        s
    }

    fn normalize(&mut self) {
        if self.den.is_negative() {
            self.den = -&self.den;
            for x in &mut self.nums {
                *x = -&*x;
            }
        }
        if self.den.is_one() {
            return;
        }
        let mut g = self.den.clone();
        for x in &self.nums {
            if g.is_one() {
                return;
            }
            g = g.gcd(x);
        }
        if !g.is_one() {
            self.den /= &g;
            for x in &mut self.nums {
                *x /= &g;
            }
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Number of stored coefficients.
    pub fn precision(&self) -> usize {
        self.nums.len()
    }

    pub fn numerators(&self) -> &[BigInt] {
        &self.nums
    }

    pub fn denominator(&self) -> &BigInt {
        &self.den
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        BigRational::new(self.nums[k].clone(), self.den.clone())
    }

    pub fn coeffs(&self) -> Vec<BigRational> {
        (0..self.nums.len()).map(|k| self.coeff(k)).collect()
    }

    /// Sign of coefficient `k` (the denominator is positive).
    pub fn coeff_sign(&self, k: usize) -> i8 {
        match self.nums[k].sign() {
            num_bigint::Sign::Minus => -1,
            num_bigint::Sign::NoSign => 0,
            num_bigint::Sign::Plus => 1,
        }
    }

    pub fn coeff_f64(&self, k: usize) -> f64 {
        if self.den.is_one() {
            self.nums[k].to_f64().unwrap_or(f64::NAN)
        } else {
            self.coeff(k).to_f64().unwrap_or(f64::NAN)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.nums.iter().all(Zero::is_zero)
    }

    pub fn nonzero_count(&self) -> usize {
        self.nums.iter().filter(|x| !x.is_zero()).count()
    }

    pub fn truncate(&self, precision: usize) -> Self {
        let n = precision.min(self.nums.len());
        Self::from_parts(self.width, self.nums[..n].to_vec(), self.den.clone())
    }

    /// Re-express in `q^{1/width}` by index dilation; `width` must be a multiple of the
    /// current width.
    pub fn align(&self, width: u32) -> Self {
        check_width(width);
        assert!(width.is_multiple_of(self.width), "cannot align width {} to {}", self.width, width);
        let r = (width / self.width) as usize;
        if r == 1 {
            return self.clone();
        }
        let mut nums = vec![BigInt::zero(); self.nums.len() * r];
        for (k, x) in self.nums.iter().enumerate() {
            nums[k * r] = x.clone();
        }
        QExpansion { width, den: self.den.clone(), nums }
    }

    fn aligned_pair(&self, other: &Self) -> (Self, Self) {
        let w = self.width.max(other.width);
        (self.align(w), other.align(w))
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let nums = self.nums.iter().map(|x| x * c.numer()).collect();
        Self::from_parts(self.width, nums, &self.den * c.denom())
    }

    pub fn scale_int(&self, c: &BigInt) -> Self {
        let nums = self.nums.iter().map(|x| x * c).collect();
        Self::from_parts(self.width, nums, self.den.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, true)
    }

    fn combine(&self, other: &Self, negate: bool) -> Self {
        let (a, b) = self.aligned_pair(other);
        let n = a.nums.len().min(b.nums.len());
        let den = a.den.lcm(&b.den);
        let fa = &den / &a.den;
        let fb = &den / &b.den;
        let nums = (0..n)
            .map(|k| {
                let x = &a.nums[k] * &fa;
                let y = &b.nums[k] * &fb;
                if negate { x - y } else { x + y }
            })
            .collect();
        Self::from_parts(a.width, nums, den)
    }

    /// Cauchy product truncated to the smaller precision. Uses the sparse kernel when one
    /// operand has at most `2√N` nonzero terms.
    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.aligned_pair(other);
        let n = a.nums.len().min(b.nums.len());
        let limit = 2.0 * (n as f64).sqrt();
        if (b.nonzero_count() as f64) <= limit {
            a.mul_sparse(&b)
        } else if (a.nonzero_count() as f64) <= limit {
            b.mul_sparse(&a)
        } else {
            a.mul_dense(&b)
        }
    }

    /// Dense product (schoolbook for short series, multi-modular NTT otherwise).
    pub fn mul_dense(&self, other: &Self) -> Self {
        let (a, b) = self.aligned_pair(other);
        let n = a.nums.len().min(b.nums.len());
        let nums = dense_convolution(&a.nums, &b.nums, n);
        Self::from_parts(a.width, nums, &a.den * &b.den)
    }

    /// Product computed by scattering the nonzero terms of `sparse` over `self`.
    pub fn mul_sparse(&self, sparse: &Self) -> Self {
        let (a, b) = self.aligned_pair(sparse);
        let n = a.nums.len().min(b.nums.len());
        let terms: Vec<(usize, &BigInt)> =
            b.nums[..n].iter().enumerate().filter(|(_, x)| !x.is_zero()).collect();
        let mut distinct: Vec<&BigInt> = terms.iter().map(|&(_, x)| x).collect();
        distinct.sort();
        distinct.dedup();
        // scaled copies of the dense operand, one per distinct sparse coefficient
        let scaled: Vec<Vec<BigInt>> = distinct
            .par_iter()
            .map(|&c| a.nums[..n].iter().map(|x| if c.is_one() { x.clone() } else { x * c }).collect())
            .collect();
        let plan: Vec<(usize, usize)> = terms
            .iter()
            .map(|&(k, c)| (k, distinct.binary_search(&c).expect("present")))
            .collect();
        let mut out = vec![BigInt::zero(); n];
        const CHUNK: usize = 2048;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            let lo = ci * CHUNK;
            let hi = lo + chunk.len();
            for &(k, which) in &plan {
                if k >= hi {
                    break;
                }
                let src = &scaled[which];
                let start = lo.max(k);
                for idx in start..hi {
                    chunk[idx - lo] += &src[idx - k];
                }
            }
        });
        Self::from_parts(a.width, out, &a.den * &b.den)
    }

    /// `self^k` by binary powering; `k = 0` gives the constant series 1.
    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::one(self.width, self.nums.len());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Numerical value at `z` in the upper half plane: `Σ c_k e^{2πi k z / w}`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let step = (Complex64::i() * 2.0 * std::f64::consts::PI * z / self.width as f64).exp();
        let den = self.den.to_f64().unwrap_or(f64::NAN);
        // Horner from the top keeps this stable for |q| < 1.
        let mut acc = Complex64::new(0.0, 0.0);
        for x in self.nums.iter().rev() {
            acc = acc * step + x.to_f64().unwrap_or(f64::NAN);
        }
        acc / den
    }
}

impl Add for &QExpansion {
    type Output = QExpansion;
    fn add(self, rhs: &QExpansion) -> QExpansion {
        QExpansion::add(self, rhs)
    }
}

impl Sub for &QExpansion {
    type Output = QExpansion;
    fn sub(self, rhs: &QExpansion) -> QExpansion {
        QExpansion::sub(self, rhs)
    }
}

impl Mul for &QExpansion {
    type Output = QExpansion;
    fn mul(self, rhs: &QExpansion) -> QExpansion {
        QExpansion::mul(self, rhs)
    }
}

impl Neg for &QExpansion {
    type Output = QExpansion;
    fn neg(self) -> QExpansion {
        QExpansion { width: self.width, den: self.den.clone(), nums: self.nums.iter().map(|x| -x).collect() }
    }
}

fn dense_convolution(a: &[BigInt], b: &[BigInt], n: usize) -> Vec<BigInt> {
    let a = &a[..a.len().min(n)];
    let b = &b[..b.len().min(n)];
    if a.len().min(b.len()) > SCHOOLBOOK_CUTOFF {
        if let Some(v) = ntt::convolve(a, b, n) {
            return v;
        }
    }
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut s = BigInt::zero();
            let lo = k.saturating_sub(b.len().saturating_sub(1));
            for i in lo..=k.min(a.len().saturating_sub(1)) {
                if a.is_empty() {
                    break;
                }
                let (x, y) = (&a[i], &b[k - i]);
                if !x.is_zero() && !y.is_zero() {
                    s += x * y;
                }
            }
            s
        })
        .collect()
}

/// `θ(z) = 1 + 2 Σ_{n≥1} q^{n²}` to `precision` terms.
pub fn theta_expansion(precision: usize) -> QExpansion {
    let mut nums = vec![BigInt::zero(); precision];
    let mut m = 0usize;
    while m * m < precision {
        nums[m * m] = BigInt::from(if m == 0 { 1 } else { 2 });
        m += 1;
    }
    QExpansion::from_integers(1, nums)
}

/// `F(z) = Σ_{n odd} σ₁(n) qⁿ`, the weight-2 generator on `Γ₀(4)`.
pub fn f2_expansion(precision: usize) -> QExpansion {
    let sigma = sigma1_table(precision);
    let nums = (0..precision)
        .map(|n| if n % 2 == 1 { BigInt::from(sigma[n]) } else { BigInt::zero() })
        .collect();
    QExpansion::from_integers(1, nums)
}
