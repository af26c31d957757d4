//! Linear DdQq lattice Boltzmann schemes: velocities, moment basis, the
//! equilibrium matrix `E`, relaxation parameters and the collision matrix.
//!
//! Relaxation is parametrized by `sigma_k`, with rates `s_k = 1/(sigma_k + 1/2)`,
//! so `0 < s_k < 2` holds for every positive `sigma_k`.

mod d2q9;
mod file;

pub use d2q9::{d2q9_preset, D2Q9_CONSERVED, D2Q9_NONCONSERVED};
pub use file::{MomentSpec, MomentTermSpec, SchemeFile, SCHEME_FILE_VERSION};

use std::collections::{BTreeSet, HashMap};

use num_rational::BigRational;
use num_traits::Signed;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symkernel::{rat, Poly, RatFun, RatMatrix, SymError, Symbol, SymbolKind};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("singular moment matrix")]
    SingularMomentMatrix,
    #[error("invalid scheme: {0}")]
    Invalid(String),
    #[error("relaxation rate {0} outside the open interval (0, 2)")]
    RateOutOfRange(BigRational),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("scheme file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Velocities `v_j = lambda * c_j` with integer lattice vectors `c_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VelocitySet {
    dim: usize,
    lattice: Vec<Vec<i64>>,
}

impl VelocitySet {
    pub fn new(dim: usize, lattice: Vec<Vec<i64>>) -> Result<Self, SchemeError> {
        if dim == 0 {
            return Err(SchemeError::Invalid("dimension must be positive".into()));
        }
        if lattice.is_empty() {
            return Err(SchemeError::Invalid("empty velocity set".into()));
        }
        if let Some(v) = lattice.iter().find(|v| v.len() != dim) {
            return Err(SchemeError::Invalid(format!(
                "velocity {v:?} does not have {dim} components"
            )));
        }
        let distinct: BTreeSet<&Vec<i64>> = lattice.iter().collect();
        if distinct.len() != lattice.len() {
            return Err(SchemeError::Invalid("duplicate velocities".into()));
        }
        Ok(VelocitySet { dim, lattice })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    /// Integer lattice displacement of velocity `j` per time step.
    pub fn lattice(&self, j: usize) -> &[i64] {
        &self.lattice[j]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[i64]> {
        self.lattice.iter().map(|v| v.as_slice())
    }
}

/// One term `coeff * X^p1 * Y^p2 ... * lambda^l` of a moment polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentTerm {
    pub coeff: BigRational,
    pub powers: Vec<u32>,
    pub lambda_power: u32,
}

/// Polynomial in the velocity components (and the scale `lambda`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentPoly {
    pub terms: Vec<MomentTerm>,
}

impl MomentPoly {
    /// Value at `v = lambda * c`, as a polynomial in `lambda`.
    pub fn eval_at(&self, c: &[i64], lambda: Symbol) -> Poly {
        let mut out = Poly::zero();
        for t in &self.terms {
            let mut v = t.coeff.clone();
            let mut deg = t.lambda_power;
            for (&ci, &p) in c.iter().zip(&t.powers) {
                v *= num_traits::pow(BigRational::from_integer(ci.into()), p as usize);
                deg += p;
            }
            out.add_assign_ref(&Poly::var(lambda).pow(deg).scale(&v));
        }
        out
    }

    /// Scaling degree in `lambda` when every term has the same one.
    pub fn lambda_degree(&self) -> Option<u32> {
        let mut it = self
            .terms
            .iter()
            .map(|t| t.lambda_power + t.powers.iter().sum::<u32>());
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }
}

/// How a conserved moment transforms under a change of frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConservedKind {
    Scalar,
    /// Component `0` of a vector.
    X,
    Y,
    Z,
}

impl ConservedKind {
    pub fn component(self) -> Option<usize> {
        match self {
            ConservedKind::Scalar => None,
            ConservedKind::X => Some(0),
            ConservedKind::Y => Some(1),
            ConservedKind::Z => Some(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MomentBasis {
    pub names: Vec<String>,
    pub polys: Vec<MomentPoly>,
    /// Kinds of the leading conserved moments; its length is `N`.
    pub conserved: Vec<ConservedKind>,
}

impl MomentBasis {
    pub fn n_conserved(&self) -> usize {
        self.conserved.len()
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }
}

/// `M[k][j] = p_k(v_j)`, checked invertible.
pub fn build_moment_matrix(
    basis: &MomentBasis,
    vels: &VelocitySet,
    lambda: Symbol,
) -> Result<(RatMatrix, RatMatrix), SchemeError> {
    if basis.len() != vels.len() {
        return Err(SchemeError::Invalid(format!(
            "{} moments for {} velocities",
            basis.len(),
            vels.len()
        )));
    }
    for (name, p) in basis.names.iter().zip(&basis.polys) {
        if p.terms.iter().any(|t| t.powers.len() != vels.dim()) {
            return Err(SchemeError::Invalid(format!(
                "moment {name} has terms of the wrong dimension"
            )));
        }
    }
    let m = RatMatrix::from_fn(basis.len(), vels.len(), |k, j| {
        RatFun::from_poly(basis.polys[k].eval_at(vels.lattice(j), lambda))
    });
    let inv = m.inverse().map_err(|e| match e {
        SymError::Singular => SchemeError::SingularMomentMatrix,
        other => SchemeError::Sym(other),
    })?;
    Ok((m, inv))
}

/// A linear DdQq scheme with symbolic equilibrium and relaxation parameters.
#[derive(Debug, Clone)]
pub struct SchemeSpec {
    pub name: String,
    pub velocities: VelocitySet,
    pub basis: MomentBasis,
    /// `(q - N) x N`, `Y_eq = E W`.
    pub equilibrium: RatMatrix,
    /// One `sigma_k` per non-conserved moment.
    pub sigmas: Vec<RatFun>,
    pub parameters: Vec<Symbol>,
    pub lambda: Symbol,
    pub dt: Symbol,
    moment_matrix: RatMatrix,
    moment_inverse: RatMatrix,
}

impl SchemeSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        velocities: VelocitySet,
        basis: MomentBasis,
        equilibrium: RatMatrix,
        sigmas: Vec<RatFun>,
        parameters: Vec<Symbol>,
        lambda: Symbol,
        dt: Symbol,
    ) -> Result<Self, SchemeError> {
        let q = velocities.len();
        let n = basis.n_conserved();
        if n == 0 || n >= q {
            return Err(SchemeError::Invalid(format!(
                "conserved count {n} must lie in 1..{q}"
            )));
        }
        if equilibrium.rows() != q - n || equilibrium.cols() != n {
            return Err(SchemeError::Invalid(format!(
                "equilibrium matrix is {}x{}, expected {}x{}",
                equilibrium.rows(),
                equilibrium.cols(),
                q - n,
                n
            )));
        }
        if sigmas.len() != q - n {
            return Err(SchemeError::Invalid(format!(
                "{} relaxation parameters for {} non-conserved moments",
                sigmas.len(),
                q - n
            )));
        }
        for s in &sigmas {
            if let Some(v) = s.constant_value() {
                if !v.is_positive() {
                    return Err(SchemeError::Invalid(format!(
                        "relaxation parameter {v} must be positive"
                    )));
                }
            }
        }
        for k in &basis.conserved {
            if let Some(c) = k.component() {
                if c >= velocities.dim() {
                    return Err(SchemeError::Invalid(format!(
                        "conserved vector component {c} exceeds dimension"
                    )));
                }
            }
        }
        let (moment_matrix, moment_inverse) = build_moment_matrix(&basis, &velocities, lambda)?;
        Ok(SchemeSpec {
            name: name.into(),
            velocities,
            basis,
            equilibrium,
            sigmas,
            parameters,
            lambda,
            dt,
            moment_matrix,
            moment_inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.velocities.dim()
    }

    pub fn q(&self) -> usize {
        self.velocities.len()
    }

    pub fn n_conserved(&self) -> usize {
        self.basis.n_conserved()
    }

    pub fn moment_matrix(&self) -> &RatMatrix {
        &self.moment_matrix
    }

    pub fn moment_inverse(&self) -> &RatMatrix {
        &self.moment_inverse
    }

    pub fn moment_index(&self, name: &str) -> Option<usize> {
        self.basis.names.iter().position(|n| n == name)
    }

    /// Relaxation rates `s_k = 1/(sigma_k + 1/2)`.
    pub fn rates(&self) -> Vec<RatFun> {
        self.sigmas.iter().map(s_of_sigma).collect()
    }

    /// `S^{-1} = Diag(sigma_k + 1/2)`.
    pub fn inverse_rates(&self) -> RatMatrix {
        let half = RatFun::from_ratio(1, 2);
        RatMatrix::diag(&self.sigmas.iter().map(|s| s + &half).collect::<Vec<_>>())
    }

    pub fn parameter(&self, name: &str) -> Option<Symbol> {
        self.parameters.iter().copied().find(|s| s.name() == name)
    }

    /// Resolver for expressions over this scheme's symbols.
    pub fn resolve(&self, name: &str) -> Option<Symbol> {
        if name == self.lambda.name() {
            return Some(self.lambda);
        }
        if name == self.dt.name() {
            return Some(self.dt);
        }
        self.parameter(name)
    }

    /// Substitutes parameter values, keeping the structure of the scheme.
    pub fn specialize(&self, bindings: &HashMap<Symbol, RatFun>) -> Result<SchemeSpec, SchemeError> {
        let mut out = self.clone();
        out.equilibrium = self.equilibrium.substitute(bindings)?;
        out.sigmas = self
            .sigmas
            .iter()
            .map(|s| s.substitute(bindings))
            .collect::<Result<_, _>>()?;
        for s in &out.sigmas {
            if let Some(v) = s.constant_value() {
                if !v.is_positive() {
                    return Err(SchemeError::Invalid(format!(
                        "relaxation parameter {v} must be positive"
                    )));
                }
            }
        }
        Ok(out)
    }
}

/// Collision matrix `J = [[Id_N, 0], [S E, Id - S]]` acting on moments.
#[derive(Debug, Clone)]
pub struct CollisionMatrix {
    pub j: RatMatrix,
    pub n_conserved: usize,
}

pub fn build_collision(spec: &SchemeSpec) -> CollisionMatrix {
    let q = spec.q();
    let n = spec.n_conserved();
    let rates = spec.rates();
    let mut j = RatMatrix::zeros(q, q);
    j.set_block(0, 0, &RatMatrix::identity(n));
    let s = RatMatrix::diag(&rates);
    let se = s.mul(&spec.equilibrium).expect("dimensions checked");
    j.set_block(n, 0, &se);
    let rest = RatMatrix::identity(q - n).sub(&s).expect("square");
    j.set_block(n, n, &rest);
    CollisionMatrix { j, n_conserved: n }
}

/// `s = 1/(sigma + 1/2)`.
pub fn s_of_sigma(sigma: &RatFun) -> RatFun {
    let d = sigma + &RatFun::from_ratio(1, 2);
    RatFun::one().div_ref(&d).expect("sigma + 1/2 is not identically zero")
}

/// `sigma = 1/s - 1/2`, for `0 < s < 2`.
pub fn sigma_of_s(s: &BigRational) -> Result<BigRational, SchemeError> {
    if !s.is_positive() || *s >= rat(2, 1) {
        return Err(SchemeError::RateOutOfRange(s.clone()));
    }
    Ok(s.recip() - rat(1, 2))
}

pub(crate) fn scale_symbols() -> (Symbol, Symbol) {
    (
        Symbol::named("lambda", SymbolKind::Scale),
        Symbol::named("dt", SymbolKind::Scale),
    )
}
