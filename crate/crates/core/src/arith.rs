//! Multiplicative number-theoretic primitives.
//!
//! Everything here is indexed through a [`FactorizationCache`], a smallest-prime-factor
//! sieve that is immutable after construction and can be shared freely between threads.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

/// Default limit on the number of sieve entries (about 1 GiB of `u32`s).
pub const DEFAULT_SIEVE_BUDGET: u64 = 1 << 28;

/// Scale exponent of the dyadic upper bound used for `ψ`: each factor is bounded by
/// `1 + ⌈2^k p^{-1/2}⌉ / 2^k` with `k = PSI_BOUND_BITS`.
pub const PSI_BOUND_BITS: u32 = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ArithError {
    #[error("sieve bound {requested} exceeds the configured budget of {budget} entries")]
    ResourceLimit { requested: u64, budget: u64 },
    #[error("sieve bound must be at least 1")]
    EmptySieve,
    #[error("{n} is outside the factorization cache (limit {limit})")]
    OutOfCache { n: u64, limit: u64 },
    #[error("{0} is not a squarefree integer")]
    NotSquarefree(i64),
}

/// Prime factorizations of every `1 ≤ n ≤ N_max`, stored as a smallest-prime-factor table.
#[derive(Debug, Clone)]
pub struct FactorizationCache {
    spf: Vec<u32>,
}

/// Divisor-type data of a single integer.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisorData {
    pub tau: u64,
    pub sigma: u64,
    /// `ψ(n) = ∏_{p | n} (1 + p^{-1/2})` in double precision.
    pub psi: f64,
    /// Exact dyadic rational with `psi_upper ≥ ψ(n)`.
    pub psi_upper: BigRational,
}

impl FactorizationCache {
    pub fn new(n_max: u64) -> Result<Self, ArithError> {
        Self::with_budget(n_max, DEFAULT_SIEVE_BUDGET)
    }

    pub fn with_budget(n_max: u64, budget: u64) -> Result<Self, ArithError> {
        if n_max == 0 {
            return Err(ArithError::EmptySieve);
        }
        if n_max > budget || n_max > u32::MAX as u64 {
            return Err(ArithError::ResourceLimit { requested: n_max, budget });
        }
        let n = n_max as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                let p = i as u32;
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = p;
                    }
                    j += i;
                }
            }
        }
        if n >= 1 {
            spf[1] = 1;
        }
        Ok(FactorizationCache { spf })
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    fn check(&self, n: u64) -> Result<(), ArithError> {
        if n == 0 || n > self.limit() {
            Err(ArithError::OutOfCache { n, limit: self.limit() })
        } else {
            Ok(())
        }
    }

    /// `(prime, exponent)` pairs with strictly increasing primes; empty for `n = 1`.
    pub fn factorize(&self, n: u64) -> Result<Vec<(u64, u32)>, ArithError> {
        self.check(n)?;
        let mut out: Vec<(u64, u32)> = Vec::new();
        let mut m = n as usize;
        while m > 1 {
            let p = self.spf[m] as usize;
            let mut e = 0;
            while m.is_multiple_of(p) {
                m /= p;
                e += 1;
            }
            out.push((p as u64, e));
        }
        Ok(out)
    }

    pub fn is_prime(&self, n: u64) -> Result<bool, ArithError> {
        self.check(n)?;
        Ok(n > 1 && self.spf[n as usize] as u64 == n)
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        (2..self.spf.len()).filter(move |&i| self.spf[i] as usize == i).map(|i| i as u64)
    }

    pub fn mobius(&self, n: u64) -> Result<i8, ArithError> {
        let f = self.factorize(n)?;
        if f.iter().any(|&(_, e)| e > 1) {
            return Ok(0);
        }
        Ok(if f.len() % 2 == 0 { 1 } else { -1 })
    }

    pub fn is_squarefree(&self, n: u64) -> Result<bool, ArithError> {
        Ok(self.factorize(n)?.iter().all(|&(_, e)| e == 1))
    }

    /// Squarefree indicator for every `0 ≤ n ≤ limit` (index 0 is `false`).
    pub fn squarefree_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.spf.len()];
        for (n, slot) in mask.iter_mut().enumerate().skip(1) {
            let mut m = n;
            let mut ok = true;
            while m > 1 {
                let p = self.spf[m] as usize;
                m /= p;
                if m % p == 0 {
                    ok = false;
                    break;
                }
            }
            *slot = ok;
        }
        mask
    }

    pub fn tau_sigma_psi(&self, n: u64) -> Result<DivisorData, ArithError> {
        let f = self.factorize(n)?;
        let mut tau = 1u64;
        let mut sigma = 1u64;
        for &(p, e) in &f {
            tau *= e as u64 + 1;
            let mut s = 1u64;
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                s += pk;
            }
            sigma *= s;
        }
        let mut psi = 1.0f64;
        for &(p, _) in f.iter().rev() {
            psi *= 1.0 + (p as f64).powf(-0.5);
        }
        let mut psi_upper = BigRational::one();
        let scale = BigInt::one() << PSI_BOUND_BITS;
        for &(p, _) in &f {
            let u = ceil_scaled_inv_sqrt(p);
            psi_upper *= BigRational::new(scale.clone() + BigInt::from(u), scale.clone());
        }
        Ok(DivisorData { tau, sigma, psi, psi_upper })
    }

    pub fn tau(&self, n: u64) -> Result<u64, ArithError> {
        Ok(self.factorize(n)?.iter().map(|&(_, e)| e as u64 + 1).product())
    }

    /// Divisors of `n` in increasing order.
    pub fn divisors(&self, n: u64) -> Result<Vec<u64>, ArithError> {
        let mut divs = vec![1u64];
        for (p, e) in self.factorize(n)? {
            let len = divs.len();
            let mut pk = 1;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    divs.push(divs[i] * pk);
                }
            }
        }
        divs.sort_unstable();
        Ok(divs)
    }
}

/// Smallest `u` with `u² p ≥ 2^{2k}`, i.e. `⌈2^k / √p⌉` for `k = PSI_BOUND_BITS`.
fn ceil_scaled_inv_sqrt(p: u64) -> u64 {
    let target: u128 = 1u128 << (2 * PSI_BOUND_BITS);
    let mut u = ((target / p as u128) as f64).sqrt() as u128;
    while u > 0 && (u - 1) * (u - 1) * p as u128 >= target {
        u -= 1;
    }
    while u * u * (p as u128) < target {
        u += 1;
    }
    u as u64
}

/// Divisor sums `σ₁(n)` for `0 ≤ n < len` (index 0 holds 0).
pub fn sigma1_table(len: usize) -> Vec<u64> {
    let mut s = vec![0u64; len];
    for d in 1..len {
        let mut m = d;
        while m < len {
            s[m] += d as u64;
            m += d;
        }
    }
    s
}

/// Trial-division squarefree test, for integers outside any sieve.
pub fn is_squarefree_int(t: i64) -> bool {
    if t == 0 {
        return false;
    }
    let mut m = t.unsigned_abs();
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            m /= p;
            if m.is_multiple_of(p) {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// The Kronecker symbol `(a/n)`, the full extension of the Jacobi symbol to all integers.
pub fn kronecker_symbol(a: i64, n: i64) -> i8 {
    const TAB2: [i8; 8] = [0, 1, 0, -1, 0, -1, 0, 1];
    let mut a = a as i128;
    let mut b = n as i128;
    if b == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    if a % 2 == 0 && b % 2 == 0 {
        return 0;
    }
    let v = b.trailing_zeros();
    b >>= v;
    let mut k: i8 = if v.is_multiple_of(2) { 1 } else { TAB2[(a & 7) as usize] };
    if b < 0 {
        b = -b;
        if a < 0 {
            k = -k;
        }
    }
    // b is odd and positive from here on.
    loop {
        if a == 0 {
            return if b == 1 { k } else { 0 };
        }
        let v = a.trailing_zeros();
        a >>= v;
        if v % 2 == 1 {
            k *= TAB2[(b & 7) as usize];
        }
        if a & b & 2 != 0 {
            k = -k;
        }
        let r = a.abs();
        a = b % r;
        b = r;
    }
}

/// `χ_t(n) = χ₀(n) (−1/n)^ℓ (t/n)` with `χ₀` the principal character modulo 2.
pub fn chi_t(t: i64, ell: u32, n: u64) -> Result<i8, ArithError> {
    if !is_squarefree_int(t) {
        return Err(ArithError::NotSquarefree(t));
    }
    Ok(chi_t_unchecked(t, ell, n))
}

/// [`chi_t`] without the squarefree check on `t`.
pub fn chi_t_unchecked(t: i64, ell: u32, n: u64) -> i8 {
    if n.is_multiple_of(2) {
        return 0;
    }
    let n = n as i64;
    let minus_one = if ell.is_multiple_of(2) { 1 } else { kronecker_symbol(-1, n) };
    minus_one * kronecker_symbol(t, n)
}

/// Deterministic Miller–Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn cache() -> FactorizationCache {
        FactorizationCache::new(10_000).unwrap()
    }

    #[test]
    fn factorization_examples() {
        let c = FactorizationCache::new(1).unwrap();
        assert_eq!(c.factorize(1).unwrap(), vec![]);
        let c = cache();
        assert_eq!(c.factorize(12).unwrap(), vec![(2, 2), (3, 1)]);
        assert_eq!(c.factorize(30).unwrap(), vec![(2, 1), (3, 1), (5, 1)]);
    }

    #[test]
    fn factorizations_reconstruct() {
        let c = cache();
        for n in 1..=10_000u64 {
            let f = c.factorize(n).unwrap();
            assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
            let prod: u64 = f.iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(prod, n);
        }
    }

    #[test]
    fn budget_and_range_errors() {
        assert_eq!(
            FactorizationCache::with_budget(100, 10).unwrap_err(),
            ArithError::ResourceLimit { requested: 100, budget: 10 }
        );
        assert_eq!(FactorizationCache::new(0).unwrap_err(), ArithError::EmptySieve);
        let c = FactorizationCache::new(10).unwrap();
        assert!(matches!(c.mobius(11), Err(ArithError::OutOfCache { .. })));
        assert!(matches!(c.is_squarefree(0), Err(ArithError::OutOfCache { .. })));
    }

    #[test]
    fn mobius_and_squarefree_examples() {
        let c = cache();
        assert_eq!(c.mobius(1).unwrap(), 1);
        assert_eq!(c.mobius(30).unwrap(), -1);
        assert_eq!(c.mobius(12).unwrap(), 0);
        assert!(c.is_squarefree(1).unwrap());
        assert!(!c.is_squarefree(9).unwrap());
        assert!(c.is_squarefree(10).unwrap());
    }

    #[test]
    fn squarefree_detector_identity() {
        let c = cache();
        let mask = c.squarefree_mask();
        for n in 1..=10_000u64 {
            let s: i64 = (1..)
                .take_while(|d: &u64| d * d <= n)
                .filter(|d| n % (d * d) == 0)
                .map(|d| c.mobius(d).unwrap() as i64)
                .sum();
            let sf = c.is_squarefree(n).unwrap();
            assert_eq!(s, if sf { 1 } else { 0 }, "n = {n}");
            assert_eq!(mask[n as usize], sf);
        }
    }

    #[test]
    fn tau_sigma_psi_examples() {
        let c = cache();
        let one = c.tau_sigma_psi(1).unwrap();
        assert_eq!((one.tau, one.sigma, one.psi), (1, 1, 1.0));
        assert!(one.psi_upper.is_one());
        let d = c.tau_sigma_psi(12).unwrap();
        assert_eq!((d.tau, d.sigma), (6, 28));
        let expect = (1.0 + 2f64.powf(-0.5)) * (1.0 + 3f64.powf(-0.5));
        assert!((d.psi - expect).abs() < 1e-15);
        for p in [2u64, 3, 97, 9973] {
            let d = c.tau_sigma_psi(p).unwrap();
            assert_eq!((d.tau, d.sigma), (2, p + 1));
            assert!((d.psi - (1.0 + (p as f64).powf(-0.5))).abs() < 1e-15);
        }
    }

    #[test]
    fn psi_upper_bound_is_rigorous_and_tight() {
        let c = cache();
        for n in 1..=10_000u64 {
            let d = c.tau_sigma_psi(n).unwrap();
            let up = d.psi_upper.to_f64().unwrap();
            assert!(up >= d.psi * (1.0 - 1e-15));
            assert!(up - d.psi < 1e-8);
            assert!(d.psi <= d.tau as f64);
        }
        // exact check of the per-prime rounding: u² p ≥ 4^k > (u-1)² p
        for p in [2u64, 3, 5, 7, 9973] {
            let u = ceil_scaled_inv_sqrt(p) as u128;
            let t = 1u128 << 64;
            assert!(u * u * p as u128 >= t && (u - 1) * (u - 1) * (p as u128) < t);
        }
    }

    #[test]
    fn tau_sigma_multiplicative() {
        let c = cache();
        for m in 1..=100u64 {
            for n in 1..=(10_000 / m) {
                if num_integer::gcd(m, n) != 1 {
                    continue;
                }
                let (a, b, ab) = (
                    c.tau_sigma_psi(m).unwrap(),
                    c.tau_sigma_psi(n).unwrap(),
                    c.tau_sigma_psi(m * n).unwrap(),
                );
                assert_eq!(ab.tau, a.tau * b.tau);
                assert_eq!(ab.sigma, a.sigma * b.sigma);
            }
        }
    }

    #[test]
    fn divisors_listing() {
        let c = cache();
        assert_eq!(c.divisors(12).unwrap(), vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(c.divisors(1).unwrap(), vec![1]);
    }

    #[test]
    fn kronecker_examples() {
        for a in -20..20 {
            assert_eq!(kronecker_symbol(a, 1), 1);
        }
        assert_eq!(kronecker_symbol(5, 3), -1);
        assert_eq!(kronecker_symbol(2, 15), 1);
        assert_eq!(kronecker_symbol(0, 1), 1);
        assert_eq!(kronecker_symbol(3, 0), 0);
        assert_eq!(kronecker_symbol(-1, 0), 1);
    }

    #[test]
    fn chi_t_examples() {
        assert_eq!(chi_t(1, 4, 7).unwrap(), 1);
        assert_eq!(chi_t(1, 6, 3).unwrap(), 1);
        for t in [1, 2, 3, 5, 6] {
            for ell in 4..8 {
                assert_eq!(chi_t(t, ell, 2).unwrap(), 0);
            }
        }
        assert_eq!(chi_t(5, 4, 3).unwrap(), -1);
        assert_eq!(chi_t(12, 4, 5), Err(ArithError::NotSquarefree(12)));
    }

    #[test]
    fn chi_t_completely_multiplicative() {
        for t in [1i64, 2, 3, 5, 6, 7, 10, 11, 15, 30] {
            for ell in [4u32, 5] {
                for a in 1..=1000u64 {
                    for b in 1..=(1000 / a) {
                        assert_eq!(
                            chi_t(t, ell, a * b).unwrap(),
                            chi_t(t, ell, a).unwrap() * chi_t(t, ell, b).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn miller_rabin_matches_sieve() {
        let c = cache();
        for n in 1..=10_000u64 {
            assert_eq!(is_prime_u64(n), c.is_prime(n).unwrap());
        }
        assert!(is_prime_u64(998_244_353));
        assert!(!is_prime_u64(998_244_353 * 3));
    }

    #[test]
    fn sigma_table_matches_cache() {
        let c = cache();
        let s = sigma1_table(2001);
        for n in 1..=2000u64 {
            assert_eq!(s[n as usize], c.tau_sigma_psi(n).unwrap().sigma);
        }
    }
}
