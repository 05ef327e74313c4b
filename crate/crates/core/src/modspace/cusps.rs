//! Expansions of the generators θ and F at the three cusps ∞, 0, −1/2 of Γ₀(4).
//!
//! Scaling matrices: σ₀ = [[0, −1/2], [2, 0]] with `f|σ₀(z) = (2z)^{−k} f(−1/(4z))`, and
//! σ_{−1/2} = [[1, 0], [−2, 1]] with `f|σ_{−1/2}(z) = (1−2z)^{−k} f(z/(1−2z))`, powers taken on
//! the principal branch. Each slashed generator equals a root of unity times a series with
//! rational coefficients:
//!
//! | gen | ∞ | 0 | −1/2 |
//! |-----|---|---|------|
//! | θ   | θ(z) | θ(z) | 2 Σ_{n odd} q^{n²/4} |
//! | F   | F(z) | −θ(z+1/2)⁴/16 | θ(z)⁴/16 |
//!
//! The roots of unity are recovered numerically and every entry is checked against direct
//! evaluation of the definitions at several points before the table is returned.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{FormMonomial, ModspaceError};
use crate::qseries::{f2_expansion, theta_expansion, QExpansion};

/// Width used for every cusp expansion.
pub const CUSP_WIDTH: u32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cusp {
    Infinity,
    Zero,
    MinusHalf,
}

impl Cusp {
    pub const ALL: [Cusp; 3] = [Cusp::Infinity, Cusp::Zero, Cusp::MinusHalf];

    pub fn label(self) -> &'static str {
        match self {
            Cusp::Infinity => "inf",
            Cusp::Zero => "0",
            Cusp::MinusHalf => "-1/2",
        }
    }

    /// Numerical `f|σ(z)` for `f` of weight `k`, given a direct evaluator of `f`.
    pub fn slash(self, f: impl Fn(Complex64) -> Complex64, k: f64, z: Complex64) -> Complex64 {
        match self {
            Cusp::Infinity => f(z),
            Cusp::Zero => (2.0 * z).powf(-k) * f(-1.0 / (4.0 * z)),
            Cusp::MinusHalf => {
                let w = Complex64::new(1.0, 0.0) - 2.0 * z;
                w.powf(-k) * f(z / w)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Generator {
    Theta,
    F,
}

impl Generator {
    pub fn weight(self) -> f64 {
        match self {
            Generator::Theta => 0.5,
            Generator::F => 2.0,
        }
    }

    /// Evaluation straight from the defining series.
    pub fn evaluate(self, z: Complex64) -> Complex64 {
        match self {
            Generator::Theta => theta_numeric(z),
            Generator::F => f2_numeric(z),
        }
    }
}

/// `1 + 2 Σ_{n≥1} e(n² z)`.
pub fn theta_numeric(z: Complex64) -> Complex64 {
    let mut s = Complex64::new(1.0, 0.0);
    let mut n = 1u64;
    loop {
        let t = (Complex64::i() * 2.0 * PI * (n * n) as f64 * z).exp();
        s += 2.0 * t;
        if t.norm() < 1e-20 {
            return s;
        }
        n += 1;
    }
}

/// `Σ_{n odd} σ₁(n) e(nz)`.
pub fn f2_numeric(z: Complex64) -> Complex64 {
    let y = z.im;
    // stop once σ₁(n)|q|^n ≤ n²e^{−2πny} is negligible
    let mut s = Complex64::new(0.0, 0.0);
    let mut n = 1u64;
    loop {
        let mag = (n as f64).powi(2) * (-2.0 * PI * n as f64 * y).exp();
        if mag < 1e-20 && n > 8 {
            return s;
        }
        let sigma: u64 = (1..=n).filter(|d| n.is_multiple_of(*d)).sum();
        s += sigma as f64 * (Complex64::i() * 2.0 * PI * n as f64 * z).exp();
        n += 2;
    }
}

/// One table entry: `g|σ = e^{2πi·root/8} · expansion`, `expansion` in powers of `q^{1/4}`.
#[derive(Clone, Debug)]
pub struct CuspEntry {
    pub root: u8,
    pub expansion: QExpansion,
    pub leading_exponent: BigRational,
}

impl CuspEntry {
    pub fn automorphy_constant(&self) -> Complex64 {
        root_of_unity(self.root)
    }
}

pub fn root_of_unity(k: u8) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (k % 8) as f64 / 8.0)
}

#[derive(Clone, Debug)]
pub struct CuspExpansionTable {
    precision: usize,
    entries: Vec<((Generator, Cusp), CuspEntry)>,
}

/// Points used for validation of every table entry.
pub const VALIDATION_POINTS: [(f64, f64); 3] = [(0.0, 1.0), (1.0, 1.0), (0.0, 2.0)];

impl CuspExpansionTable {
    /// Number of `q^{1/4}` coefficients in each entry.
    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn entry(&self, g: Generator, c: Cusp) -> &CuspEntry {
        &self.entries.iter().find(|(k, _)| *k == (g, c)).expect("complete table").1
    }

    /// `θ^a F^j |σ_c` as a root-of-unity index and a rational expansion.
    pub fn monomial(&self, m: FormMonomial, c: Cusp) -> (u8, QExpansion) {
        let t = self.entry(Generator::Theta, c);
        let f = self.entry(Generator::F, c);
        let root = ((t.root as u32 * m.a + f.root as u32 * m.j) % 8) as u8;
        let e = t.expansion.pow(m.a).mul(&f.expansion.pow(m.j));
        (root, e)
    }
}

fn rational_entry(width: u32, nums: Vec<BigInt>, den: i64) -> QExpansion {
    QExpansion::from_parts(width, nums, BigInt::from(den))
}

/// Real expansion data derived from the two classical transformation laws.
fn derived_expansion(g: Generator, c: Cusp, n: usize) -> (QExpansion, BigRational) {
    let w = CUSP_WIDTH as usize;
    let coarse = n.div_ceil(w) + 1;
    let zero = BigRational::zero();
    match (g, c) {
        (Generator::Theta, Cusp::Infinity) | (Generator::Theta, Cusp::Zero) => {
            (theta_expansion(coarse).align(CUSP_WIDTH).truncate(n), zero)
        }
        (Generator::F, Cusp::Infinity) => (f2_expansion(coarse).align(CUSP_WIDTH).truncate(n), BigRational::one()),
        (Generator::Theta, Cusp::MinusHalf) => {
            let mut nums = vec![BigInt::zero(); n];
            let mut k = 1usize;
            while k * k < n {
                nums[k * k] = BigInt::from(2);
                k += 2;
            }
            (rational_entry(CUSP_WIDTH, nums, 1), BigRational::new(1.into(), 4.into()))
        }
        (Generator::F, Cusp::Zero) => {
            // θ(z+1/2) = Σ (−1)^m q^{m²}
            let th = theta_expansion(coarse);
            let flipped: Vec<BigInt> = th
                .numerators()
                .iter()
                .enumerate()
                .map(|(i, x)| if is_odd_square(i) { -x } else { x.clone() })
                .collect();
            let shifted = QExpansion::from_integers(1, flipped).pow(4);
            (shifted.scale(&BigRational::new((-1).into(), 16.into())).align(CUSP_WIDTH).truncate(n), zero)
        }
        (Generator::F, Cusp::MinusHalf) => {
            let t4 = theta_expansion(coarse).pow(4);
            (t4.scale(&BigRational::new(1.into(), 16.into())).align(CUSP_WIDTH).truncate(n), zero)
        }
    }
}

fn is_odd_square(i: usize) -> bool {
    let r = (i as f64).sqrt().round() as usize;
    r * r == i && r % 2 == 1
}

/// Build and validate the cusp table with `n ≥ 16` coefficients per entry.
pub fn build_cusp_expansion_table(n: usize) -> Result<CuspExpansionTable, ModspaceError> {
    if n < 16 {
        return Err(ModspaceError::PrecisionTooSmall { requested: n, minimum: 16 });
    }
    let mut entries = Vec::new();
    for g in [Generator::Theta, Generator::F] {
        for c in Cusp::ALL {
            let (expansion, leading_exponent) = derived_expansion(g, c, n);
            let root = recover_root(g, c, &expansion)?;
            entries.push(((g, c), CuspEntry { root, expansion, leading_exponent }));
        }
    }
    let table = CuspExpansionTable { precision: n, entries };
    check_theta_decay()?;
    Ok(table)
}

/// Snap `g|σ_c / expansion` at the first validation point to an eighth root of unity and
/// confirm it at every validation point to 1e-9.
fn recover_root(g: Generator, c: Cusp, e: &QExpansion) -> Result<u8, ModspaceError> {
    let fail = |detail: String| ModspaceError::CuspValidation { generator: format!("{g:?}"), cusp: c.label(), detail };
    let k = g.weight();
    let at = |(x, y): (f64, f64)| {
        let z = Complex64::new(x, y);
        (c.slash(|w| g.evaluate(w), k, z), e.eval(z))
    };
    let (direct, series) = at(VALIDATION_POINTS[0]);
    let ratio = direct / series;
    if (ratio.norm() - 1.0).abs() > 1e-9 {
        return Err(fail(format!("|ratio| = {} is not 1", ratio.norm())));
    }
    let root = ((ratio.arg() / (2.0 * PI) * 8.0).round().rem_euclid(8.0)) as u8;
    let zeta = root_of_unity(root);
    for p in VALIDATION_POINTS {
        let (direct, series) = at(p);
        let err = (direct - zeta * series).norm() / series.norm().max(1e-300);
        if err > 1e-9 {
            return Err(fail(format!("relative error {err:e} at z = {}+{}i", p.0, p.1)));
        }
    }
    Ok(root)
}

/// `|θ|σ_{−1/2}(iY)| / (2e^{−2πY/4})` must be close to 1 for `Y ∈ {5, 10, 20}`.
fn check_theta_decay() -> Result<(), ModspaceError> {
    for ratio in theta_decay_ratios() {
        if (ratio.1 - 1.0).abs() > 0.05 {
            return Err(ModspaceError::CuspValidation {
                generator: "Theta".into(),
                cusp: Cusp::MinusHalf.label(),
                detail: format!("decay ratio {} at Y = {}", ratio.1, ratio.0),
            });
        }
    }
    Ok(())
}

/// `(Y, ratio)` pairs of the decay oracle, from direct evaluation of the definition.
pub fn theta_decay_ratios() -> Vec<(f64, f64)> {
    [5.0, 10.0, 20.0]
        .into_iter()
        .map(|y: f64| {
            let v = Cusp::MinusHalf.slash(theta_numeric, 0.5, Complex64::new(0.0, y));
            (y, v.norm() / (2.0 * (-2.0 * PI * y / 4.0).exp()))
        })
        .collect()
}
