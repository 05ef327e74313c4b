//! Brute-force oracles for the exact pipeline.

use std::collections::BTreeMap;

use halfsign_core::arith::kronecker_symbol;
use halfsign_core::hecke::{basis_for_primes, eigenforms, hecke_matrices, EigenConfig, HeckeEigenform};
use halfsign_core::hecke::{load_eigenforms, save_eigenforms};
use halfsign_core::qseries::{f2_expansion, theta_expansion};
use halfsign_core::shimura::{check_square_multiples, lift_coefficients};
use num_bigint::BigInt;
use num_rational::BigRational;

fn trial_factor(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            out.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn pow_mod(mut b: i64, mut e: i64, m: i64) -> i64 {
    let mut r = 1;
    b = b.rem_euclid(m);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Kronecker symbol from Euler's criterion at each odd prime factor.
fn kronecker_oracle(a: i64, n: i64) -> i8 {
    if n == 0 {
        return if a.abs() == 1 { 1 } else { 0 };
    }
    let mut r: i8 = if n < 0 && a < 0 { -1 } else { 1 };
    for p in trial_factor(n.unsigned_abs()) {
        let p = p as i64;
        r *= if p == 2 {
            match a.rem_euclid(8) {
                1 | 7 => 1,
                3 | 5 => -1,
                _ => 0,
            }
        } else {
            match pow_mod(a, (p - 1) / 2, p) {
                0 => 0,
                1 => 1,
                _ => -1,
            }
        };
    }
    r
}

#[test]
fn kronecker_matches_euler_criterion() {
    for a in -80..=80 {
        for n in -80..=80 {
            assert_eq!(kronecker_symbol(a, n), kronecker_oracle(a, n), "({a}/{n})");
        }
    }
}

#[test]
fn generators_match_direct_definitions() {
    let n = 5000;
    let theta = theta_expansion(n);
    for k in 0..n {
        let r = (k as f64).sqrt().round() as usize;
        let expected = if k == 0 { 1 } else if r * r == k { 2 } else { 0 };
        assert_eq!(theta.coeff(k), BigRational::from_integer(expected.into()), "θ at {k}");
    }
    let f = f2_expansion(n);
    for k in 0..n {
        let expected: u64 = if k % 2 == 1 { (1..=k as u64).filter(|d| (k as u64).is_multiple_of(*d)).sum() } else { 0 };
        assert_eq!(f.coeff(k), BigRational::from_integer(expected.into()), "F at {k}");
    }
}

fn weight_four_eigenform(n: usize) -> HeckeEigenform {
    let primes = [3, 5, 7];
    let basis = basis_for_primes(4, &primes).unwrap();
    let m = hecke_matrices(&basis, &primes).unwrap();
    let dec = eigenforms(&basis, &m, &EigenConfig::default()).unwrap();
    assert_eq!(dec.eigenforms.len(), 1);
    let mut f = dec.eigenforms.into_iter().next().unwrap();
    f.form = f.form.expanded(n).unwrap();
    f
}

/// q-coefficients of q∏(1−qⁿ)⁸(1−q²ⁿ)⁸ by repeated multiplication with integer loops.
fn eta_product_coefficients(len: usize) -> Vec<i128> {
    let mut c = vec![0i128; len];
    c[1] = 1;
    for n in 1..len {
        for step in [n, 2 * n] {
            for _ in 0..8 {
                if step >= len {
                    break;
                }
                for k in (step..len).rev() {
                    c[k] -= c[k - step];
                }
            }
        }
    }
    c
}

#[test]
fn lift_matches_weight_eight_level_two_newform() {
    let mut f = weight_four_eigenform(10_001);
    let primes: Vec<u64> = (2..=50).filter(|&p| (2..p).all(|d| p % d != 0)).collect();
    f.extend_eigenvalues(&primes).unwrap();
    let lift = lift_coefficients(&f, 50).unwrap();
    let eta = eta_product_coefficients(51);
    assert_eq!(&eta[1..6], &[1, -8, 12, 64, -210]);
    for n in 1..=50u64 {
        let v = lift.coeff(n).unwrap().as_rational().unwrap();
        assert_eq!(v, BigRational::from_integer(BigInt::from(eta[n as usize])), "Sh({n})");
    }
}

#[test]
fn square_multiples_from_lift_match_expansion() {
    let mut f = weight_four_eigenform(8_001);
    let primes: Vec<u64> = (2..=63).filter(|&p| (2..p).all(|d| p % d != 0)).collect();
    f.extend_eigenvalues(&primes).unwrap();
    let lift = lift_coefficients(&f, 63).unwrap();
    let (checked, bad) = check_square_multiples(&f, &lift, 4_000).unwrap();
    assert_eq!(checked, 4_000);
    assert!(bad.is_empty(), "{bad:?}");
}

#[test]
fn eigenform_cache_round_trips_exactly() {
    let f = weight_four_eigenform(600);
    let dir = std::env::temp_dir().join(format!("halfsign-oracle-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("forms.json");
    save_eigenforms(&path, std::slice::from_ref(&f)).unwrap();
    let back = load_eigenforms(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(back.len(), 1);
    let g = &back[0];
    for n in 0..600 {
        assert_eq!(g.form.coeff(n), f.form.coeff(n), "coefficient {n}");
    }
    let ev = |h: &HeckeEigenform| h.eigenvalues.iter().map(|(p, v)| (*p, v.display())).collect::<BTreeMap<_, _>>();
    assert_eq!(ev(g), ev(&f));
    assert_eq!(g.t0, f.t0);
}
