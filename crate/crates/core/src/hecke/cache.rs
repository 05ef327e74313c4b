//! JSON persistence of eigenforms.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{HeckeEigenform, HeckeError};
use crate::modspace::HalfIntegralCuspForm;
use crate::numfield::{FieldScalar, NumberField};
use crate::poly::{QPoly, RootInterval};
use crate::serde_rational::{parse, to_string};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigenformCacheFile {
    pub ell: u32,
    pub precision: usize,
    /// Coefficients of the monic minimal polynomial, constant term first.
    pub minimal_polynomial: Vec<String>,
    /// `[lo, hi]` isolating the embedded root.
    pub embedding: [String; 2],
    /// Power-basis coefficients of each monomial coordinate.
    pub coordinates: Vec<Vec<String>>,
    /// `p → ω_p` in the power basis.
    pub eigenvalues: BTreeMap<u64, Vec<String>>,
    #[serde(default)]
    pub non_eigen_primes: Vec<u64>,
    pub t0: usize,
}

fn strings(xs: &[BigRational]) -> Vec<String> {
    xs.iter().map(to_string).collect()
}

fn rationals(xs: &[String]) -> Result<Vec<BigRational>, HeckeError> {
    xs.iter()
        .map(|s| parse(s).ok_or_else(|| HeckeError::Cache(format!("bad rational {s:?}"))))
        .collect()
}

impl EigenformCacheFile {
    pub fn from_eigenform(f: &HeckeEigenform) -> Self {
        let field = f.field();
        let iv = field.interval();
        EigenformCacheFile {
            ell: f.ell(),
            precision: f.form.precision(),
            minimal_polynomial: strings(field.minpoly().coeffs()),
            embedding: [to_string(&iv.lo), to_string(&iv.hi)],
            coordinates: f.form.coordinates().iter().map(|c| strings(&c.coefficients())).collect(),
            eigenvalues: f.eigenvalues.iter().map(|(&p, w)| (p, strings(&w.coefficients()))).collect(),
            non_eigen_primes: f.non_eigen_primes.iter().copied().collect(),
            t0: f.t0,
        }
    }

    /// Rebuild the eigenform; the field embedding is re-verified, eigenvalues are taken as
    /// stored.
    pub fn to_eigenform(&self) -> Result<HeckeEigenform, HeckeError> {
        let m = QPoly::new(rationals(&self.minimal_polynomial)?);
        let lo = parse(&self.embedding[0]).ok_or_else(|| HeckeError::Cache("bad embedding".into()))?;
        let hi = parse(&self.embedding[1]).ok_or_else(|| HeckeError::Cache("bad embedding".into()))?;
        let field = if m == QPoly::x() {
            NumberField::rationals()
        } else {
            NumberField::from_interval(&m, RootInterval { lo, hi })?
        };
        let scalar = |xs: &[String]| -> Result<FieldScalar, HeckeError> {
            Ok(FieldScalar::from_poly(&field, QPoly::new(rationals(xs)?)))
        };
        let coords = self.coordinates.iter().map(|c| scalar(c)).collect::<Result<Vec<_>, _>>()?;
        let form = HalfIntegralCuspForm::from_coordinates(self.ell, &field, coords, self.precision)?;
        let eigenvalues = self
            .eigenvalues
            .iter()
            .map(|(&p, w)| Ok((p, scalar(w)?)))
            .collect::<Result<BTreeMap<_, _>, HeckeError>>()?;
        Ok(HeckeEigenform {
            form,
            eigenvalues,
            non_eigen_primes: self.non_eigen_primes.iter().copied().collect::<BTreeSet<_>>(),
            t0: self.t0,
        })
    }
}

pub fn save_eigenforms(path: &Path, forms: &[HeckeEigenform]) -> Result<(), HeckeError> {
    let files: Vec<EigenformCacheFile> = forms.iter().map(EigenformCacheFile::from_eigenform).collect();
    let text = serde_json::to_string_pretty(&files).map_err(|e| HeckeError::Cache(e.to_string()))?;
    fs::write(path, text).map_err(|e| HeckeError::Cache(format!("{}: {e}", path.display())))
}

pub fn load_eigenforms(path: &Path) -> Result<Vec<HeckeEigenform>, HeckeError> {
    let text = fs::read_to_string(path).map_err(|e| HeckeError::Cache(format!("{}: {e}", path.display())))?;
    let files: Vec<EigenformCacheFile> = serde_json::from_str(&text).map_err(|e| HeckeError::Cache(e.to_string()))?;
    files.iter().map(EigenformCacheFile::to_eigenform).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hecke::{basis_for_primes, eigenforms, hecke_matrices, EigenConfig};

    #[test]
    fn round_trip_is_exact() {
        for ell in [4, 10] {
            let basis = basis_for_primes(ell, &[3, 5]).unwrap();
            let m = hecke_matrices(&basis, &[3, 5]).unwrap();
            let dec = eigenforms(&basis, &m, &EigenConfig::default()).unwrap();
            for f in &dec.eigenforms {
                let file = EigenformCacheFile::from_eigenform(f);
                let text = serde_json::to_string(&file).unwrap();
                let back: EigenformCacheFile = serde_json::from_str(&text).unwrap();
                assert_eq!(back, file);
                let g = back.to_eigenform().unwrap();
                assert_eq!(EigenformCacheFile::from_eigenform(&g), file);
                for n in 0..f.form.precision().min(200) {
                    assert_eq!(g.form.coeff(n), f.form.coeff(n));
                }
            }
        }
    }
}
