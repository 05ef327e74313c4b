//! JSON persistence of rational cusp-space bases.

use std::fs;
use std::path::Path;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{monomial_basis, HalfIntegralCuspForm, ModspaceError};
use crate::serde_rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisCacheFile {
    pub ell: u32,
    pub precision: usize,
    /// `[a, j]` for each monomial `θ^a F^j`.
    pub monomials: Vec<[u32; 2]>,
    /// One row of `"p/q"` strings per basis form.
    pub coordinates: Vec<Vec<String>>,
    /// SHA-256 over the coefficient strings ĥ(0..precision) of every form.
    pub checksum: String,
}

/// Hex SHA-256 of `"p/q"` coefficient strings, comma-separated within a form and
/// semicolon-separated between forms.
pub fn basis_checksum(basis: &[HalfIntegralCuspForm]) -> String {
    let mut h = Sha256::new();
    for (i, f) in basis.iter().enumerate() {
        if i > 0 {
            h.update(b";");
        }
        for n in 0..f.precision() {
            if n > 0 {
                h.update(b",");
            }
            let c = f.coeff_rational(n).expect("rational basis");
            h.update(serde_rational::to_string(&c).as_bytes());
        }
    }
    hex::encode(h.finalize())
}

impl BasisCacheFile {
    pub fn from_basis(ell: u32, basis: &[HalfIntegralCuspForm]) -> Result<Self, ModspaceError> {
        let monomials = monomial_basis(ell)?.iter().map(|m| [m.a, m.j]).collect();
        let coordinates = basis
            .iter()
            .map(|f| {
                f.rational_coordinates()
                    .ok_or_else(|| ModspaceError::Cache("basis form is not rational".into()))
                    .map(|c| c.iter().map(serde_rational::to_string).collect())
            })
            .collect::<Result<_, _>>()?;
        Ok(BasisCacheFile {
            ell,
            precision: basis.first().map_or(0, HalfIntegralCuspForm::precision),
            monomials,
            coordinates,
            checksum: basis_checksum(basis),
        })
    }

    /// Rebuild the basis and verify monomials and checksum.
    pub fn to_basis(&self) -> Result<Vec<HalfIntegralCuspForm>, ModspaceError> {
        let expected: Vec<[u32; 2]> = monomial_basis(self.ell)?.iter().map(|m| [m.a, m.j]).collect();
        if expected != self.monomials {
            return Err(ModspaceError::Cache("monomial list does not match ℓ".into()));
        }
        let basis = self
            .coordinates
            .iter()
            .map(|row| {
                let coords: Vec<BigRational> = row
                    .iter()
                    .map(|s| serde_rational::parse(s).ok_or_else(|| ModspaceError::Cache(format!("bad rational {s:?}"))))
                    .collect::<Result<_, _>>()?;
                if coords.len() != expected.len() {
                    return Err(ModspaceError::Cache("coordinate row has the wrong length".into()));
                }
                HalfIntegralCuspForm::from_rational_coordinates(self.ell, &coords, self.precision)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sum = basis_checksum(&basis);
        if sum != self.checksum {
            return Err(ModspaceError::Cache(format!("checksum mismatch: stored {}, recomputed {sum}", self.checksum)));
        }
        Ok(basis)
    }
}

pub fn save_basis(path: &Path, ell: u32, basis: &[HalfIntegralCuspForm]) -> Result<(), ModspaceError> {
    let file = BasisCacheFile::from_basis(ell, basis)?;
    let text = serde_json::to_string_pretty(&file).map_err(|e| ModspaceError::Cache(e.to_string()))?;
    fs::write(path, text).map_err(|e| ModspaceError::Cache(format!("{}: {e}", path.display())))
}

pub fn load_basis(path: &Path) -> Result<(BasisCacheFile, Vec<HalfIntegralCuspForm>), ModspaceError> {
    let text = fs::read_to_string(path).map_err(|e| ModspaceError::Cache(format!("{}: {e}", path.display())))?;
    let file: BasisCacheFile = serde_json::from_str(&text).map_err(|e| ModspaceError::Cache(e.to_string()))?;
    let basis = file.to_basis()?;
    Ok((file, basis))
}
