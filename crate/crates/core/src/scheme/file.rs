//! Declarative JSON scheme description.
//!
//! ```json
//! {
//!   "version": 1,
//!   "name": "d1q3",
//!   "dimension": 1,
//!   "velocities": [[0], [1], [-1]],
//!   "moments": [
//!     {"name": "rho", "conserved": "scalar", "terms": [{"coeff": "1", "powers": [0]}]},
//!     {"name": "j", "terms": [{"coeff": "1", "powers": [1]}]},
//!     {"name": "e", "terms": [{"coeff": "1", "powers": [2]}]}
//!   ],
//!   "parameters": ["a", "b", "sigma_j", "sigma_e"],
//!   "equilibrium": [["a*lambda"], ["b*lambda^2"]],
//!   "relaxation": ["sigma_j", "sigma_e"]
//! }
//! ```
//!
//! Velocities are integer multiples of `lambda`. A moment term is
//! `coeff * X^powers[0] * Y^powers[1] ... * lambda^lambda`. Conserved moments
//! come first. Equilibrium rows follow the non-conserved moments, columns the
//! conserved ones; entries and relaxation parameters are expressions over the
//! declared parameters and `lambda`.

use std::collections::HashSet;
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::{
    scale_symbols, ConservedKind, MomentBasis, MomentPoly, MomentTerm, SchemeError, SchemeSpec,
    VelocitySet,
};
use crate::symkernel::{parse_with, RatFun, RatMatrix, Symbol, SymbolKind};

pub const SCHEME_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentTermSpec {
    pub coeff: String,
    pub powers: Vec<u32>,
    #[serde(default, skip_serializing_if = "is_zero_u32")]
    pub lambda: u32,
}

fn is_zero_u32(x: &u32) -> bool {
    *x == 0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conserved: Option<ConservedKind>,
    pub terms: Vec<MomentTermSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeFile {
    pub version: u32,
    pub name: String,
    pub dimension: usize,
    pub velocities: Vec<Vec<i64>>,
    pub moments: Vec<MomentSpec>,
    pub parameters: Vec<String>,
    pub equilibrium: Vec<Vec<String>>,
    pub relaxation: Vec<String>,
}

impl SchemeFile {
    pub fn from_json(text: &str) -> Result<SchemeFile, SchemeError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scheme file serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<SchemeFile, SchemeError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SchemeError::Invalid(format!("{}: {e}", path.display())))?;
        SchemeFile::from_json(&text)
    }

    pub fn build(&self) -> Result<SchemeSpec, SchemeError> {
        if self.version != SCHEME_FILE_VERSION {
            return Err(SchemeError::Invalid(format!(
                "unsupported scheme file version {}",
                self.version
            )));
        }
        let velocities = VelocitySet::new(self.dimension, self.velocities.clone())?;

        let mut names = Vec::new();
        let mut polys = Vec::new();
        let mut conserved = Vec::new();
        let mut seen = HashSet::new();
        for (k, m) in self.moments.iter().enumerate() {
            if !seen.insert(m.name.as_str()) {
                return Err(SchemeError::Invalid(format!("duplicate moment {}", m.name)));
            }
            match m.conserved {
                Some(kind) if conserved.len() == k => conserved.push(kind),
                Some(_) => {
                    return Err(SchemeError::Invalid(format!(
                        "conserved moment {} must precede the non-conserved ones",
                        m.name
                    )))
                }
                None => {}
            }
            let terms = m
                .terms
                .iter()
                .map(|t| {
                    let coeff = BigRational::from_str(t.coeff.trim()).map_err(|_| {
                        SchemeError::Invalid(format!("moment {}: bad coefficient {:?}", m.name, t.coeff))
                    })?;
                    Ok(MomentTerm {
                        coeff,
                        powers: t.powers.clone(),
                        lambda_power: t.lambda,
                    })
                })
                .collect::<Result<Vec<_>, SchemeError>>()?;
            names.push(m.name.clone());
            polys.push(MomentPoly { terms });
        }
        let basis = MomentBasis {
            names,
            polys,
            conserved,
        };

        let (lambda, dt) = scale_symbols();
        let mut params = Vec::new();
        for p in &self.parameters {
            if p == "lambda" || p == "dt" {
                return Err(SchemeError::Invalid(format!("{p} is reserved")));
            }
            let s = Symbol::new(p, SymbolKind::Parameter)?;
            if params.contains(&s) {
                return Err(SchemeError::Invalid(format!("duplicate parameter {p}")));
            }
            params.push(s);
        }
        let resolve = |name: &str| -> Option<Symbol> {
            if name == "lambda" {
                return Some(lambda);
            }
            params.iter().copied().find(|s| s.name() == name)
        };

        let n = basis.n_conserved();
        let rows = self
            .equilibrium
            .iter()
            .map(|row| {
                if row.len() != n {
                    return Err(SchemeError::Invalid(format!(
                        "equilibrium row has {} entries, expected {n}",
                        row.len()
                    )));
                }
                row.iter()
                    .map(|e| parse_with(e, &resolve).map_err(SchemeError::from))
                    .collect()
            })
            .collect::<Result<Vec<Vec<RatFun>>, _>>()?;
        let equilibrium = if rows.is_empty() {
            RatMatrix::zeros(0, n)
        } else {
            RatMatrix::from_rows(rows)?
        };
        let sigmas = self
            .relaxation
            .iter()
            .map(|e| parse_with(e, &resolve).map_err(SchemeError::from))
            .collect::<Result<Vec<_>, _>>()?;

        SchemeSpec::new(
            self.name.clone(),
            velocities,
            basis,
            equilibrium,
            sigmas,
            params,
            lambda,
            dt,
        )
    }
}

impl SchemeSpec {
    pub fn from_json(text: &str) -> Result<SchemeSpec, SchemeError> {
        SchemeFile::from_json(text)?.build()
    }

    pub fn to_file(&self) -> SchemeFile {
        let n = self.n_conserved();
        let moments = self
            .basis
            .names
            .iter()
            .zip(&self.basis.polys)
            .enumerate()
            .map(|(k, (name, p))| MomentSpec {
                name: name.clone(),
                conserved: (k < n).then(|| self.basis.conserved[k]),
                terms: p
                    .terms
                    .iter()
                    .map(|t| MomentTermSpec {
                        coeff: t.coeff.to_string(),
                        powers: t.powers.clone(),
                        lambda: t.lambda_power,
                    })
                    .collect(),
            })
            .collect();
        SchemeFile {
            version: SCHEME_FILE_VERSION,
            name: self.name.clone(),
            dimension: self.dim(),
            velocities: self.velocities.iter().map(|v| v.to_vec()).collect(),
            moments,
            parameters: self.parameters.iter().map(|s| s.name()).collect(),
            equilibrium: (0..self.equilibrium.rows())
                .map(|i| {
                    (0..n)
                        .map(|j| self.equilibrium[(i, j)].to_canonical_string())
                        .collect()
                })
                .collect(),
            relaxation: self.sigmas.iter().map(|s| s.to_canonical_string()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        self.to_file().to_json()
    }
}
