//! Exact dense linear algebra over ℚ and over real number fields.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::numfield::FieldScalar;
use crate::poly::QPoly;

/// Field operations needed by the elimination routines. Elements carry enough context
/// (e.g. their number field) to build zero and one from any existing element.
pub trait FieldElem: Clone + PartialEq + Send + Sync {
    fn is_zero_elem(&self) -> bool;
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn negated(&self) -> Self;
    /// Panics on zero.
    fn inverse(&self) -> Self;
}

impl FieldElem for BigRational {
    fn is_zero_elem(&self) -> bool {
        Zero::is_zero(self)
    }
    fn zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn one_like(&self) -> Self {
        BigRational::one()
    }
    fn plus(&self, o: &Self) -> Self {
        self + o
    }
    fn minus(&self, o: &Self) -> Self {
        self - o
    }
    fn times(&self, o: &Self) -> Self {
        self * o
    }
    fn negated(&self) -> Self {
        -self
    }
    fn inverse(&self) -> Self {
        self.recip()
    }
}

impl FieldElem for FieldScalar {
    fn is_zero_elem(&self) -> bool {
        self.is_zero()
    }
    fn zero_like(&self) -> Self {
        FieldScalar::from_int(self.field(), 0)
    }
    fn one_like(&self) -> Self {
        FieldScalar::from_int(self.field(), 1)
    }
    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn minus(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn times(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn negated(&self) -> Self {
        self.neg()
    }
    fn inverse(&self) -> Self {
        self.inv().expect("inverse of zero")
    }
}

/// Row-major matrix as a vector of rows.
pub type Matrix<E> = Vec<Vec<E>>;

/// Reduce `m` in place to reduced row echelon form; returns the pivot columns.
pub fn rref<E: FieldElem>(m: &mut Matrix<E>) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(pr) = (r..rows).find(|&i| !m[i][c].is_zero_elem()) else {
            continue;
        };
        m.swap(r, pr);
        let inv = m[r][c].inverse();
        for x in m[r].iter_mut().skip(c) {
            *x = x.times(&inv);
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero_elem() {
                continue;
            }
            let f = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row).skip(c) {
                if !p.is_zero_elem() {
                    *x = x.minus(&f.times(p));
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank<E: FieldElem>(m: &Matrix<E>) -> usize {
    rref(&mut m.clone()).len()
}

/// Basis of `{v : m·v = 0}`, one vector per free column, each with a 1 in its free column.
/// `zero` supplies the scalar context for matrices with no entries.
pub fn kernel<E: FieldElem>(m: &Matrix<E>, cols: usize, zero: &E) -> Vec<Vec<E>> {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let one = zero.one_like();
    let mut out = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![zero.clone(); cols];
        v[free] = one.clone();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = a[r][free].negated();
        }
        out.push(v);
    }
    out
}

/// Solve `Σ_j x_j·columns[j] = target` exactly; `None` if inconsistent. Columns must be
/// linearly independent.
pub fn solve_columns<E: FieldElem>(columns: &[Vec<E>], target: &[E]) -> Option<Vec<E>> {
    let k = columns.len();
    let n = target.len();
    let mut aug: Matrix<E> = (0..n)
        .map(|i| {
            let mut row: Vec<E> = columns.iter().map(|c| c[i].clone()).collect();
            row.push(target[i].clone());
            row
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&k) || pivots.len() < k {
        return None;
    }
    Some((0..k).map(|r| aug[r][k].clone()).collect())
}

pub fn mat_mul<E: FieldElem>(a: &Matrix<E>, b: &Matrix<E>) -> Matrix<E> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let inner = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    (0..inner).fold(a[i][0].zero_like(), |acc, k| acc.plus(&a[i][k].times(&b[k][j])))
                })
                .collect()
        })
        .collect()
}

/// `Σ_k c_k·M_k` for square rational matrices of equal size.
pub fn linear_combination(terms: &[(BigRational, &Matrix<BigRational>)]) -> Matrix<BigRational> {
    let n = terms[0].1.len();
    let mut out = vec![vec![BigRational::zero(); n]; n];
    for (c, m) in terms {
        for i in 0..n {
            for j in 0..n {
                out[i][j] += c * &m[i][j];
            }
        }
    }
    out
}

/// Characteristic polynomial `det(x·I − M)` of a square rational matrix (Faddeev–LeVerrier).
pub fn charpoly(m: &Matrix<BigRational>) -> QPoly {
    let n = m.len();
    let mut coeffs = vec![BigRational::zero(); n + 1];
    coeffs[n] = BigRational::one();
    let mut mk: Matrix<BigRational> = vec![vec![BigRational::zero(); n]; n];
    for k in 1..=n {
        // M_k = A·M_{k−1} + c_{n−k+1}·I ; c_{n−k} = −tr(A·M_k)/k
        let mut next = if k == 1 { mk.clone() } else { mat_mul(m, &mk) };
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &coeffs[n - k + 1];
        }
        mk = next;
        let am = mat_mul(m, &mk);
        let tr: BigRational = (0..n).map(|i| am[i][i].clone()).sum();
        coeffs[n - k] = -tr / BigRational::from_integer(BigInt::from(k));
    }
    QPoly::new(coeffs)
}

/// Substitute a field element into a rational matrix and subtract it from the diagonal.
pub fn shifted<E: FieldElem>(m: &Matrix<BigRational>, lift: impl Fn(&BigRational) -> E, shift: &E) -> Matrix<E> {
    m.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, x)| if i == j { lift(x).minus(shift) } else { lift(x) })
                .collect()
        })
        .collect()
}
