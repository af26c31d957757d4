//! Numerical validation of the symbolic results: exact Fourier analysis of
//! the linear scheme, dispersion fits against the derived tensors, and a
//! time-domain runner on periodic grids.

mod fourier;
mod grid;

pub use fourier::{
    amplification_matrix, branch_series, compare_series, compare_with_tensors, eigenvalue_expansion,
    tensor_symbol, BranchFit, Comparison, ComparisonRow, DispersionFit, FitOptions, FourierSymbol,
};
pub use grid::{measure_anisotropy, run_lbm, AnisotropyOptions, AnisotropyResult, GridState};

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use crate::conditions::{ConditionError, ParameterAssignment};
use crate::scheme::{build_collision, ConservedKind, SchemeSpec};
use crate::symkernel::{RatMatrix, SymError, Symbol};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Assignment(#[from] ConditionError),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("conserved branches collide at |k| dx = {radius:.3e}; no fit beyond this radius")]
    BranchCollision { radius: f64 },
    #[error("the fit needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("unstable assignment: {0}")]
    Unstable(String),
    #[error("{0}")]
    Invalid(String),
}

/// Numeric scales: `lambda` exact, `dt = dx / lambda`.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub lambda: BigRational,
    pub dx: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            lambda: BigRational::one(),
            dx: 1.0 / 64.0,
        }
    }
}

/// A scheme with every parameter fixed, in double precision.
#[derive(Debug, Clone)]
pub struct NumericScheme {
    pub dim: usize,
    pub q: usize,
    pub n_conserved: usize,
    pub velocities: Vec<Vec<i64>>,
    pub conserved: Vec<ConservedKind>,
    pub m: DMatrix<f64>,
    pub m_inv: DMatrix<f64>,
    /// Collision in moment space.
    pub collision: DMatrix<f64>,
    /// Collision in population space, `M^-1 J M`.
    pub kernel: DMatrix<f64>,
    pub equilibrium: DMatrix<f64>,
    pub rates: Vec<f64>,
    pub lambda: f64,
    pub dx: f64,
    pub dt: f64,
    /// Exact values of the parameters and `lambda`.
    pub point: HashMap<Symbol, BigRational>,
}

fn to_f64(m: &RatMatrix, point: &HashMap<Symbol, BigRational>) -> Result<DMatrix<f64>, SymError> {
    let rows = m.eval(point)?;
    Ok(DMatrix::from_fn(m.rows(), m.cols(), |i, j| rows[i][j].to_f64().unwrap_or(f64::NAN)))
}

impl NumericScheme {
    pub fn new(spec: &SchemeSpec, assignment: &ParameterAssignment, config: &SimConfig) -> Result<Self, SimError> {
        let point = assignment.numeric(spec)?;
        Self::from_point(spec, point, config)
    }

    /// `point` must assign every parameter; `lambda` is taken from `config`.
    pub fn from_point(
        spec: &SchemeSpec,
        mut point: HashMap<Symbol, BigRational>,
        config: &SimConfig,
    ) -> Result<Self, SimError> {
        if !(config.dx > 0.0) {
            return Err(SimError::Invalid("dx must be positive".into()));
        }
        point.insert(spec.lambda, config.lambda.clone());
        let lambda = config.lambda.to_f64().unwrap_or(f64::NAN);
        if !(lambda > 0.0) {
            return Err(SimError::Invalid("lambda must be positive".into()));
        }
        let m = to_f64(spec.moment_matrix(), &point)?;
        let m_inv = to_f64(spec.moment_inverse(), &point)?;
        let collision = to_f64(&build_collision(spec).j, &point)?;
        let equilibrium = to_f64(&spec.equilibrium, &point)?;
        let rates = spec
            .rates()
            .iter()
            .map(|s| s.eval(&point).map(|v| v.to_f64().unwrap_or(f64::NAN)))
            .collect::<Result<Vec<_>, _>>()?;
        let kernel = &m_inv * &collision * &m;
        Ok(NumericScheme {
            dim: spec.dim(),
            q: spec.q(),
            n_conserved: spec.n_conserved(),
            velocities: spec.velocities.iter().map(<[i64]>::to_vec).collect(),
            conserved: spec.basis.conserved.clone(),
            m,
            m_inv,
            collision,
            kernel,
            equilibrium,
            rates,
            lambda,
            dx: config.dx,
            dt: config.dx / lambda,
            point,
        })
    }

    /// Index of the conserved moment carrying component `axis`.
    pub fn conserved_axis(&self, axis: usize) -> Option<usize> {
        self.conserved.iter().position(|k| k.component() == Some(axis))
    }

    /// Populations at equilibrium for conserved moments `w`.
    pub fn equilibrium_populations(&self, w: &[Complex64]) -> DVector<Complex64> {
        let n = self.n_conserved;
        let mut m = DVector::from_element(self.q, Complex64::new(0.0, 0.0));
        for i in 0..n {
            m[i] = w[i];
        }
        for r in 0..self.q - n {
            m[n + r] = (0..n).map(|c| w[c] * self.equilibrium[(r, c)]).sum();
        }
        self.m_inv.map(|x| Complex64::new(x, 0.0)) * m
    }
}
