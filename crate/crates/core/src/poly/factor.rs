//! Factorization over ℚ: squarefree decomposition, then Zassenhaus (factor modulo a small
//! prime, Hensel-lift to a power of it, recombine lifted factors by trial division).

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::modp::{self, ModPoly};
use super::QPoly;

/// Monic irreducible factors with multiplicities, sorted by degree then coefficients.
pub type Factorization = Vec<(QPoly, u32)>;

/// Factor a nonzero rational polynomial into monic irreducibles.
pub fn factor_over_q(f: &QPoly) -> Factorization {
    let mut out = Vec::new();
    for (part, mult) in f.squarefree_decomposition() {
        for g in factor_squarefree_integer(&part.primitive_integer()) {
            out.push((QPoly::from_bigints(&g).monic(), mult));
        }
    }
    out.sort_by(|a, b| {
        a.0.degree()
            .cmp(&b.0.degree())
            .then_with(|| a.0.coeffs().cmp(b.0.coeffs()))
    });
    out
}

/// Irreducible factors (primitive, positive leading coefficient) of a squarefree primitive
/// integer polynomial of positive degree.
pub fn factor_squarefree_integer(f: &[BigInt]) -> Vec<Vec<BigInt>> {
    let f = trim(f.to_vec());
    let n = f.len() - 1;
    if n <= 1 {
        return vec![f];
    }
    // strip a factor x exactly so the modular image stays squarefree
    if f[0].is_zero() {
        let rest: Vec<BigInt> = f[1..].to_vec();
        let mut out = vec![vec![BigInt::zero(), BigInt::one()]];
        out.extend(factor_squarefree_integer(&rest));
        return out;
    }
    let lc = f[n].clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (p, modular) = choose_prime(&f, &lc, &mut rng);
    if modular.len() == 1 {
        return vec![f];
    }
    // lifting target: p^k > 2·|lc|·2^n·‖f‖₂ bounds every coefficient of lc·g/lc(g)
    let norm2: BigInt = f.iter().map(|c| c * c).sum();
    let bound = lc.abs() * (BigInt::one() << n) * (norm2.sqrt() + 1u32) * 2u32;
    let mut k = 1u32;
    let mut pk = BigInt::from(p);
    while pk <= bound {
        pk *= p;
        k += 1;
    }
    let lifted = hensel_lift(&f, &modular, p, k);
    recombine(f, lifted, &pk)
}

fn trim(mut a: Vec<BigInt>) -> Vec<BigInt> {
    while a.last().is_some_and(Zero::is_zero) {
        a.pop();
    }
    a
}

fn reduce(a: &[BigInt], p: u64) -> ModPoly {
    let pb = BigInt::from(p);
    modp::trim(a.iter().map(|c| c.mod_floor(&pb).to_u64().unwrap()).collect())
}

fn choose_prime(f: &[BigInt], lc: &BigInt, rng: &mut ChaCha8Rng) -> (u64, Vec<ModPoly>) {
    let mut best: Option<(u64, Vec<ModPoly>)> = None;
    let mut tried = 0;
    let mut p = 2u64;
    while tried < 5 {
        p += 1;
        if !crate::arith::is_prime_u64(p) || (lc % p).is_zero() {
            continue;
        }
        let fp = reduce(f, p);
        let dfp = modp::derivative(&fp, p);
        if modp::deg(&modp::gcd(&fp, &dfp, p)).unwrap_or(0) > 0 {
            continue;
        }
        tried += 1;
        let factors = modp::factor_squarefree(&fp, p, rng);
        if best.as_ref().is_none_or(|b| factors.len() < b.1.len()) {
            best = Some((p, factors));
        }
        if best.as_ref().unwrap().1.len() == 1 {
            break;
        }
    }
    best.expect("some prime keeps a squarefree polynomial squarefree")
}

fn to_big(a: &[u64]) -> Vec<BigInt> {
    a.iter().map(|&c| BigInt::from(c)).collect()
}

fn big_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn big_mod(a: &[BigInt], m: &BigInt) -> Vec<BigInt> {
    trim(a.iter().map(|c| c.mod_floor(m)).collect())
}

/// Lift `f ≡ a·b (mod p)` with `a` monic to `f ≡ A·B (mod p^k)`.
fn hensel_pair(f: &[BigInt], a: &ModPoly, b: &ModPoly, p: u64, k: u32) -> (Vec<BigInt>, Vec<BigInt>) {
    let (s, t) = modp::bezout(a, b, p);
    let pk = BigInt::from(p).pow(k);
    let mut big_a = to_big(a);
    let mut big_b = to_big(b);
    let mut pi = BigInt::from(p);
    for _ in 1..k {
        let prod = big_mul(&big_a, &big_b);
        let n = f.len().max(prod.len());
        let diff: Vec<BigInt> = (0..n)
            .map(|i| {
                let fi = f.get(i).cloned().unwrap_or_default();
                let pr = prod.get(i).cloned().unwrap_or_default();
                (fi - pr).mod_floor(&pk)
            })
            .collect();
        let e: Vec<BigInt> = diff.iter().map(|d| d / &pi).collect();
        let e = reduce(&e, p);
        // σ·a + τ·b ≡ e with deg τ < deg a
        let (q, tau) = modp::divrem(&modp::mul(&e, &t, p), a, p);
        let sigma = modp::add(&modp::mul(&e, &s, p), &modp::mul(&q, b, p), p);
        big_a = add_scaled(&big_a, &tau, &pi, &pk);
        big_b = add_scaled(&big_b, &sigma, &pi, &pk);
        pi *= p;
    }
    (big_mod(&big_a, &pk), big_mod(&big_b, &pk))
}

fn add_scaled(a: &[BigInt], d: &ModPoly, scale: &BigInt, m: &BigInt) -> Vec<BigInt> {
    let n = a.len().max(d.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_default();
            let y = d.get(i).copied().unwrap_or(0);
            (x + scale * y).mod_floor(m)
        })
        .collect()
}

/// Monic lifts modulo `p^k` of the modular factors of `f`.
fn hensel_lift(f: &[BigInt], factors: &[ModPoly], p: u64, k: u32) -> Vec<Vec<BigInt>> {
    let pk = BigInt::from(p).pow(k);
    let mut current = big_mod(f, &pk);
    let mut out = Vec::with_capacity(factors.len());
    for i in 0..factors.len() - 1 {
        let lc_mod = (current.last().unwrap() % p).to_u64().unwrap();
        let rest = factors[i + 1..]
            .iter()
            .fold(vec![lc_mod], |acc, g| modp::mul(&acc, g, p));
        let (a, b) = hensel_pair(&current, &factors[i], &rest, p, k);
        out.push(a);
        current = b;
    }
    let lc = current.last().unwrap().clone();
    let lc_inv = lc.modinv(&pk).expect("leading coefficient is a unit modulo p^k");
    out.push(big_mod(&current.iter().map(|c| c * &lc_inv).collect::<Vec<_>>(), &pk));
    out
}

fn symmetric(a: &[BigInt], m: &BigInt) -> Vec<BigInt> {
    let half = m >> 1;
    trim(a
        .iter()
        .map(|c| {
            let r = c.mod_floor(m);
            if r > half {
                r - m
            } else {
                r
            }
        })
        .collect())
}

fn primitive(a: Vec<BigInt>) -> Vec<BigInt> {
    let g = a.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    let sign = if a.last().unwrap().is_negative() { -BigInt::one() } else { BigInt::one() };
    a.into_iter().map(|x| x / &g * &sign).collect()
}

/// Exact quotient `f / g` in ℤ[x], or `None` if `g` does not divide `f`.
fn exact_div(f: &[BigInt], g: &[BigInt]) -> Option<Vec<BigInt>> {
    let dg = g.len() - 1;
    if f.len() < g.len() {
        return None;
    }
    let mut r = f.to_vec();
    let mut q = vec![BigInt::zero(); f.len() - dg];
    let lc = &g[dg];
    for k in (0..q.len()).rev() {
        let (c, rem) = r[k + dg].div_rem(lc);
        if !rem.is_zero() {
            return None;
        }
        if !c.is_zero() {
            for (j, gc) in g.iter().enumerate() {
                r[k + j] -= &c * gc;
            }
        }
        q[k] = c;
    }
    r[..dg].iter().all(Zero::is_zero).then_some(q)
}

fn recombine(mut f: Vec<BigInt>, mut lifted: Vec<Vec<BigInt>>, pk: &BigInt) -> Vec<Vec<BigInt>> {
    let mut found = Vec::new();
    let mut s = 1;
    while 2 * s <= lifted.len() {
        let mut progressed = false;
        for subset in combinations(lifted.len(), s) {
            let lc = f.last().unwrap().clone();
            let prod = subset
                .iter()
                .fold(vec![lc], |acc, &i| big_mod(&big_mul(&acc, &lifted[i]), pk));
            let g = primitive(symmetric(&prod, pk));
            if g.len() < 2 {
                continue;
            }
            if let Some(q) = exact_div(&f, &g) {
                found.push(g);
                f = q;
                let mut k = 0;
                lifted.retain(|_| {
                    k += 1;
                    !subset.contains(&(k - 1))
                });
                progressed = true;
                break;
            }
        }
        if !progressed {
            s += 1;
        }
    }
    if f.len() > 1 {
        found.push(primitive(f));
    }
    found
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Convenience: true when `f` has no factor of lower positive degree over ℚ.
pub fn is_irreducible(f: &QPoly) -> bool {
    let fac = factor_over_q(f);
    fac.len() == 1 && fac[0].1 == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(c: &[i64]) -> QPoly {
        QPoly::from_ints(c)
    }

    fn product(fac: &Factorization) -> QPoly {
        fac.iter().fold(QPoly::one(), |acc, (g, m)| acc.mul(&g.pow(*m)))
    }

    #[test]
    fn combinations_enumerate() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(combinations(3, 1), vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn swinnerton_dyer_like_recombination() {
        // x^4 - 10x^2 + 1 is irreducible over Q but splits into linear/quadratic factors mod every prime
        let f = q(&[1, 0, -10, 0, 1]);
        let fac = factor_over_q(&f);
        assert_eq!(fac, vec![(f.clone(), 1)]);
        assert!(is_irreducible(&f));
    }

    #[test]
    fn mixed_factorization() {
        let parts = [q(&[-2, 0, 1]), q(&[3, 2]), q(&[1, 1, 1]), q(&[0, 1])];
        let f = parts.iter().fold(QPoly::one(), |acc, g| acc.mul(g)).mul(&q(&[3, 2]));
        let fac = factor_over_q(&f);
        assert_eq!(product(&fac), f.monic());
        let degrees: Vec<_> = fac.iter().map(|(g, m)| (g.degree().unwrap(), *m)).collect();
        assert_eq!(degrees, vec![(1, 1), (1, 2), (2, 1), (2, 1)]);
    }

    #[test]
    fn large_coefficient_factors() {
        let a = q(&[123_457, -9_876, 1]);
        let b = q(&[-1_000_003, 0, 0, 7]);
        let fac = factor_over_q(&a.mul(&b));
        assert_eq!(fac.len(), 2);
        assert_eq!(product(&fac), a.mul(&b).monic());
    }

    #[test]
    fn cyclotomic_factors() {
        // x^12 - 1 = Φ1 Φ2 Φ3 Φ4 Φ6 Φ12
        let mut c = vec![0i64; 13];
        c[0] = -1;
        c[12] = 1;
        let fac = factor_over_q(&q(&c));
        assert_eq!(fac.len(), 6);
        assert!(fac.iter().all(|(g, m)| *m == 1 && is_irreducible(g)));
    }
}
