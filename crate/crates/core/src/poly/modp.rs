//! Dense polynomials over a small prime field, coefficients lowest degree first.

use rand::Rng;

use crate::arith::{mul_mod, pow_mod};

pub(crate) type ModPoly = Vec<u64>;

pub(crate) fn trim(mut a: ModPoly) -> ModPoly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

pub(crate) fn deg(a: &[u64]) -> Option<usize> {
    a.len().checked_sub(1)
}

fn inv(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

pub(crate) fn add(a: &[u64], b: &[u64], p: u64) -> ModPoly {
    let n = a.len().max(b.len());
    trim((0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0)) % p)
        .collect())
}

pub(crate) fn sub(a: &[u64], b: &[u64], p: u64) -> ModPoly {
    let n = a.len().max(b.len());
    trim((0..n)
        .map(|i| (a.get(i).copied().unwrap_or(0) + p - b.get(i).copied().unwrap_or(0)) % p)
        .collect())
}

pub(crate) fn mul(a: &[u64], b: &[u64], p: u64) -> ModPoly {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + mul_mod(x, y, p)) % p;
        }
    }
    trim(out)
}

pub(crate) fn scale(a: &[u64], c: u64, p: u64) -> ModPoly {
    trim(a.iter().map(|&x| mul_mod(x, c, p)).collect())
}

pub(crate) fn monic(a: &[u64], p: u64) -> ModPoly {
    match a.last() {
        None => vec![],
        Some(&lc) => scale(a, inv(lc, p), p),
    }
}

pub(crate) fn divrem(a: &[u64], d: &[u64], p: u64) -> (ModPoly, ModPoly) {
    let dd = deg(d).expect("division by zero polynomial");
    let li = inv(d[dd], p);
    let mut r = a.to_vec();
    if r.len() <= dd {
        return (vec![], trim(r));
    }
    let mut q = vec![0u64; r.len() - dd];
    for k in (0..q.len()).rev() {
        let c = mul_mod(r[k + dd], li, p);
        if c != 0 {
            for (j, &dc) in d.iter().enumerate() {
                r[k + j] = (r[k + j] + p - mul_mod(c, dc, p)) % p;
            }
        }
        q[k] = c;
    }
    r.truncate(dd);
    (trim(q), trim(r))
}

pub(crate) fn rem(a: &[u64], d: &[u64], p: u64) -> ModPoly {
    divrem(a, d, p).1
}

pub(crate) fn gcd(a: &[u64], b: &[u64], p: u64) -> ModPoly {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !b.is_empty() {
        let r = rem(&a, &b, p);
        a = b;
        b = r;
    }
    monic(&a, p)
}

/// `(s, t)` with `s·a + t·b = 1`, assuming `a` and `b` are coprime.
pub(crate) fn bezout(a: &[u64], b: &[u64], p: u64) -> (ModPoly, ModPoly) {
    let (mut r0, mut r1) = (trim(a.to_vec()), trim(b.to_vec()));
    let (mut s0, mut s1) = (vec![1u64], vec![]);
    let (mut t0, mut t1) = (vec![], vec![1u64]);
    while !r1.is_empty() {
        let (q, r) = divrem(&r0, &r1, p);
        r0 = std::mem::replace(&mut r1, r);
        let s2 = sub(&s0, &mul(&q, &s1, p), p);
        s0 = std::mem::replace(&mut s1, s2);
        let t2 = sub(&t0, &mul(&q, &t1, p), p);
        t0 = std::mem::replace(&mut t1, t2);
    }
    debug_assert_eq!(r0.len(), 1, "bezout inputs must be coprime");
    let c = inv(r0[0], p);
    (scale(&s0, c, p), scale(&t0, c, p))
}

pub(crate) fn derivative(a: &[u64], p: u64) -> ModPoly {
    trim(a.iter().enumerate().skip(1).map(|(i, &c)| mul_mod(c, i as u64 % p, p)).collect())
}

/// `base^e mod m`.
pub(crate) fn powmod(base: &[u64], mut e: u64, m: &[u64], p: u64) -> ModPoly {
    let mut result = vec![1u64];
    let mut b = rem(base, m, p);
    while e > 0 {
        if e & 1 == 1 {
            result = rem(&mul(&result, &b, p), m, p);
        }
        b = rem(&mul(&b, &b, p), m, p);
        e >>= 1;
    }
    rem(&result, m, p)
}

/// Distinct-degree factorization of a monic squarefree polynomial: `(product, d)` pairs where
/// `product` is the product of all irreducible factors of degree `d`.
fn distinct_degree(f: &[u64], p: u64) -> Vec<(ModPoly, usize)> {
    let mut out = Vec::new();
    let mut rest = f.to_vec();
    let x = vec![0u64, 1];
    let mut h = rem(&x, &rest, p);
    let mut d = 1;
    while deg(&rest).unwrap_or(0) >= 2 * d {
        h = powmod(&h, p, &rest, p);
        let g = gcd(&sub(&h, &x, p), &rest, p);
        if deg(&g).unwrap_or(0) > 0 {
            rest = divrem(&rest, &g, p).0;
            h = rem(&h, &rest, p);
            out.push((g, d));
        }
        d += 1;
    }
    if deg(&rest).unwrap_or(0) > 0 {
        let dr = deg(&rest).unwrap();
        out.push((rest, dr));
    }
    out
}

/// Cantor–Zassenhaus equal-degree splitting for odd `p`.
fn equal_degree<R: Rng>(f: &[u64], d: usize, p: u64, rng: &mut R) -> Vec<ModPoly> {
    let n = deg(f).unwrap_or(0);
    if n == d {
        return vec![f.to_vec()];
    }
    loop {
        let a: ModPoly = trim((0..n).map(|_| rng.random_range(0..p)).collect());
        if deg(&a).unwrap_or(0) == 0 {
            continue;
        }
        let g = gcd(&a, f, p);
        let candidate = if deg(&g).unwrap_or(0) > 0 {
            g
        } else {
            // a^((p^d − 1)/2) = ∏_{i<d} (a^((p−1)/2))^(p^i)
            let c = powmod(&a, (p - 1) / 2, f, p);
            let mut acc = c.clone();
            let mut frob = c;
            for _ in 1..d {
                frob = powmod(&frob, p, f, p);
                acc = rem(&mul(&acc, &frob, p), f, p);
            }
            gcd(&sub(&acc, &[1], p), f, p)
        };
        let cd = deg(&candidate).unwrap_or(0);
        if cd > 0 && cd < n {
            let other = divrem(f, &candidate, p).0;
            let mut out = equal_degree(&candidate, d, p, rng);
            out.extend(equal_degree(&monic(&other, p), d, p, rng));
            return out;
        }
    }
}

/// Monic irreducible factors of a squarefree polynomial over `F_p`, `p` odd.
pub(crate) fn factor_squarefree<R: Rng>(f: &[u64], p: u64, rng: &mut R) -> Vec<ModPoly> {
    let f = monic(f, p);
    let mut out = Vec::new();
    for (g, d) in distinct_degree(&f, p) {
        out.extend(equal_degree(&g, d, p, rng));
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn factors_multiply_back() {
        let p = 101;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // (x-1)(x-2)(x^2+1)(x^3+x+1) over F_101
        let f = [vec![100, 1], vec![99, 1], vec![1, 0, 1], vec![1, 1, 0, 1]]
            .iter()
            .fold(vec![1u64], |acc, g| mul(&acc, g, p));
        let fs = factor_squarefree(&f, p, &mut rng);
        let prod = fs.iter().fold(vec![1u64], |acc, g| mul(&acc, g, p));
        assert_eq!(prod, f);
        for g in &fs {
            assert_eq!(*g.last().unwrap(), 1);
        }
    }

    #[test]
    fn irreducible_stays_whole() {
        let p = 7;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // x^2 + 1 is irreducible mod 7
        assert_eq!(factor_squarefree(&[1, 0, 1], p, &mut rng), vec![vec![1, 0, 1]]);
    }

    #[test]
    fn bezout_identity() {
        let p = 13;
        let a = vec![1, 0, 1];
        let b = vec![2, 1];
        let (s, t) = bezout(&a, &b, p);
        assert_eq!(add(&mul(&s, &a, p), &mul(&t, &b, p), p), vec![1]);
    }
}
