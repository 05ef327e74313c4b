//! Multi-modular number-theoretic-transform convolution of big-integer sequences.
//!
//! Inputs are reduced modulo a set of word-sized primes `p = c·2^20 + 1`, convolved by
//! NTT in each residue field, and recombined with Garner's algorithm. Enough primes are
//! used that the product of the moduli exceeds twice the a-priori coefficient bound, so
//! the reconstruction is exact.

use std::sync::OnceLock;

use num_bigint::{BigInt, Sign};
use num_traits::Zero;
use rayon::prelude::*;

use crate::arith::{is_prime_u64, pow_mod};

/// Two-adic order shared by every modulus; bounds the transform length.
const TWO_ADICITY: u32 = 20;

/// Conservative number of usable bits per modulus (all moduli exceed `2^30`).
const BITS_PER_PRIME: u64 = 30;

#[derive(Debug, Clone, Copy)]
pub(crate) struct NttPrime {
    pub p: u64,
    pub root: u64,
}

pub(crate) fn ntt_primes() -> &'static [NttPrime] {
    static PRIMES: OnceLock<Vec<NttPrime>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut out = Vec::new();
        let mut c = (1u64 << (31 - TWO_ADICITY)) - 1;
        while c > (1u64 << (30 - TWO_ADICITY)) {
            let p = (c << TWO_ADICITY) + 1;
            if is_prime_u64(p) {
                out.push(NttPrime { p, root: primitive_root(p) });
            }
            c -= 1;
        }
        out
    })
}

fn primitive_root(p: u64) -> u64 {
    let mut factors = vec![2u64];
    let mut m = (p - 1) >> TWO_ADICITY;
    let mut q = 3;
    while q * q <= m {
        if m.is_multiple_of(q) {
            factors.push(q);
            while m.is_multiple_of(q) {
                m /= q;
            }
        }
        q += 2;
    }
    if m > 1 {
        factors.push(m);
    }
    (2..p)
        .find(|&g| factors.iter().all(|&f| pow_mod(g, (p - 1) / f, p) != 1))
        .expect("every prime has a primitive root")
}

/// Maximum number of output coefficients this kernel can produce.
pub(crate) fn max_transform_len() -> usize {
    1 << TWO_ADICITY
}

fn ntt(a: &mut [u64], prime: NttPrime, invert: bool) {
    let n = a.len();
    let p = prime.p;
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            a.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let mut w = pow_mod(prime.root, (p - 1) / len as u64, p);
        if invert {
            w = pow_mod(w, p - 2, p);
        }
        let half = len / 2;
        let mut twiddles = Vec::with_capacity(half);
        let mut cur = 1u64;
        for _ in 0..half {
            twiddles.push(cur);
            cur = cur * w % p;
        }
        for chunk in a.chunks_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for k in 0..half {
                let u = lo[k];
                let v = hi[k] * twiddles[k] % p;
                lo[k] = if u + v >= p { u + v - p } else { u + v };
                hi[k] = if u >= v { u - v } else { u + p - v };
            }
        }
        len <<= 1;
    }
    if invert {
        let n_inv = pow_mod(n as u64, p - 2, p);
        for x in a.iter_mut() {
            *x = *x * n_inv % p;
        }
    }
}

fn residue(x: &BigInt, p: u64) -> u64 {
    let (sign, digits) = x.to_u32_digits();
    let base = (1u64 << 32) % p;
    let mut r = 0u64;
    for &d in digits.iter().rev() {
        r = (r * base + d as u64 % p) % p;
    }
    if sign == Sign::Minus && r != 0 {
        p - r
    } else {
        r
    }
}

fn max_bits(xs: &[BigInt]) -> u64 {
    xs.iter().map(|x| x.bits()).max().unwrap_or(0)
}

/// Number of moduli required to reconstruct a convolution of `a` and `b` exactly,
/// or `None` if the available moduli do not suffice.
pub(crate) fn primes_needed(a: &[BigInt], b: &[BigInt]) -> Option<usize> {
    let terms = a.len().min(b.len()).max(1) as u64;
    let bound_bits = max_bits(a) + max_bits(b) + (64 - terms.leading_zeros() as u64) + 2;
    let k = bound_bits.div_ceil(BITS_PER_PRIME) as usize;
    (k <= ntt_primes().len()).then_some(k.max(1))
}

/// First `out_len` coefficients of the product of `a` and `b`, or `None` if the
/// transform length or the coefficient bound is out of range for this kernel.
pub(crate) fn convolve(a: &[BigInt], b: &[BigInt], out_len: usize) -> Option<Vec<BigInt>> {
    let a = &a[..a.len().min(out_len)];
    let b = &b[..b.len().min(out_len)];
    if a.is_empty() || b.is_empty() {
        return Some(vec![BigInt::zero(); out_len]);
    }
    let full = a.len() + b.len() - 1;
    let size = full.next_power_of_two();
    if size > max_transform_len() {
        return None;
    }
    let k = primes_needed(a, b)?;
    let primes = &ntt_primes()[..k];
    let residues: Vec<Vec<u64>> = primes
        .par_iter()
        .map(|&prime| {
            let mut fa = vec![0u64; size];
            let mut fb = vec![0u64; size];
            for (slot, x) in fa.iter_mut().zip(a) {
                *slot = residue(x, prime.p);
            }
            for (slot, x) in fb.iter_mut().zip(b) {
                *slot = residue(x, prime.p);
            }
            ntt(&mut fa, prime, false);
            ntt(&mut fb, prime, false);
            for (x, y) in fa.iter_mut().zip(&fb) {
                *x = *x * y % prime.p;
            }
            ntt(&mut fa, prime, true);
            fa.truncate(out_len.min(full));
            fa
        })
        .collect();
    let garner = Garner::new(primes);
    let mut out: Vec<BigInt> = (0..out_len.min(full))
        .into_par_iter()
        .map(|i| {
            let r: Vec<u64> = residues.iter().map(|v| v[i]).collect();
            garner.reconstruct(&r)
        })
        .collect();
    out.resize(out_len, BigInt::zero());
    Some(out)
}

struct Garner {
    moduli: Vec<u64>,
    /// `inv[j][i]` = `p_i^{-1} mod p_j` for `i < j`.
    inv: Vec<Vec<u64>>,
    modulus: BigInt,
    half: BigInt,
}

impl Garner {
    fn new(primes: &[NttPrime]) -> Self {
        let moduli: Vec<u64> = primes.iter().map(|p| p.p).collect();
        let inv = moduli
            .iter()
            .enumerate()
            .map(|(j, &pj)| moduli[..j].iter().map(|&pi| pow_mod(pi % pj, pj - 2, pj)).collect())
            .collect();
        let modulus: BigInt = moduli.iter().fold(BigInt::from(1), |acc, &p| acc * p);
        let half = &modulus >> 1;
        Garner { moduli, inv, modulus, half }
    }

    fn reconstruct(&self, r: &[u64]) -> BigInt {
        let k = self.moduli.len();
        let mut digits = vec![0u64; k];
        for j in 0..k {
            let pj = self.moduli[j];
            let mut x = r[j];
            for i in 0..j {
                let d = digits[i] % pj;
                x = (x + pj - d) % pj * self.inv[j][i] % pj;
            }
            digits[j] = x;
        }
        let mut v = BigInt::from(digits[k - 1]);
        for j in (0..k - 1).rev() {
            v = v * self.moduli[j] + digits[j];
        }
        if v > self.half {
            v - &self.modulus
        } else {
            v
        }
    }
}
