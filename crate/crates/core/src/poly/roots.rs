//! Real-root isolation by Sturm sequences and bisection.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::QPoly;

/// Closed interval `[lo, hi]` with rational endpoints containing exactly one real root of a
/// squarefree polynomial. Either `lo == hi` is the root itself, or `lo < hi` and the
/// polynomial takes opposite nonzero signs at the endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RootInterval {
    #[serde(with = "crate::serde_rational")]
    pub lo: BigRational,
    #[serde(with = "crate::serde_rational")]
    pub hi: BigRational,
}

fn sign(x: &BigRational) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_positive() {
        1
    } else {
        -1
    }
}

fn half() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(2))
}

impl RootInterval {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) * half()
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn approx(&self) -> f64 {
        self.midpoint().to_f64().unwrap_or(f64::NAN)
    }

    /// Halve the interval once, keeping the root of `f` inside.
    pub fn bisect(&mut self, f: &QPoly) {
        if self.is_exact() {
            return;
        }
        let mid = self.midpoint();
        let sm = sign(&f.eval(&mid));
        if sm == 0 {
            self.lo = mid.clone();
            self.hi = mid;
        } else if sm == sign(&f.eval(&self.lo)) {
            self.lo = mid;
        } else {
            self.hi = mid;
        }
    }

    /// Bisect until the width is at most `width`.
    pub fn refine_to(&mut self, f: &QPoly, width: &BigRational) {
        while self.width() > *width {
            self.bisect(f);
        }
    }

    /// True when `other` is this interval or a subinterval obtained by refinement.
    pub fn contains(&self, other: &RootInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

struct Sturm {
    seq: Vec<QPoly>,
}

impl Sturm {
    fn new(f: &QPoly) -> Self {
        let mut seq = vec![f.clone(), f.derivative()];
        while !seq.last().unwrap().is_zero() {
            let n = seq.len();
            let r = seq[n - 2].rem(&seq[n - 1]).neg();
            seq.push(r);
        }
        seq.pop();
        Sturm { seq }
    }

    fn variations(&self, x: &BigRational) -> usize {
        let mut count = 0;
        let mut prev = 0i8;
        for p in &self.seq {
            let s = sign(&p.eval(x));
            if s != 0 {
                if prev != 0 && s != prev {
                    count += 1;
                }
                prev = s;
            }
        }
        count
    }

    /// Number of distinct roots in `(a, b]`.
    fn count(&self, a: &BigRational, b: &BigRational) -> usize {
        self.variations(a) - self.variations(b)
    }
}

/// Power of two strictly exceeding the absolute value of every complex root.
fn root_bound(f: &QPoly) -> BigRational {
    let lc = f.leading().abs();
    let m = f.coeffs()[..f.coeffs().len() - 1]
        .iter()
        .map(|c| c.abs() / &lc)
        .fold(BigRational::zero(), |a, b| if b > a { b } else { a });
    let target = m + BigRational::one();
    let mut bound = BigRational::one();
    while bound <= target {
        bound *= BigRational::from_integer(2.into());
    }
    bound
}

/// Isolating intervals for all real roots of a squarefree polynomial, in increasing order.
pub fn isolate_real_roots(f: &QPoly) -> Vec<RootInterval> {
    assert!(f.degree().unwrap_or(0) > 0, "root isolation needs positive degree");
    let sturm = Sturm::new(f);
    let m = root_bound(f);
    let mut out = Vec::new();
    isolate(f, &sturm, -m.clone(), m, &mut out);
    out
}

fn isolate(f: &QPoly, sturm: &Sturm, lo: BigRational, hi: BigRational, out: &mut Vec<RootInterval>) {
    let n = sturm.count(&lo, &hi);
    if n == 0 {
        return;
    }
    if n == 1 {
        out.push(RootInterval { lo, hi });
        return;
    }
    let mid = (&lo + &hi) * half();
    if f.eval(&mid).is_zero() {
        let mut eps = (&hi - &lo) * half() * half();
        loop {
            let a = &mid - &eps;
            let b = &mid + &eps;
            if !f.eval(&a).is_zero() && !f.eval(&b).is_zero() && sturm.count(&a, &b) == 1 {
                isolate(f, sturm, lo, a, out);
                out.push(RootInterval { lo: mid.clone(), hi: mid });
                isolate(f, sturm, b, hi, out);
                return;
            }
            eps *= half();
        }
    }
    isolate(f, sturm, lo, mid.clone(), out);
    isolate(f, sturm, mid, hi, out);
}
