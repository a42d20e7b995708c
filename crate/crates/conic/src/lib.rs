//! Small dense solvers for the two program classes the toolkit produces.
//!
//! * [`solve_lp`]: two-phase tableau simplex with a Bland fallback for
//!   degenerate cycling and a final LU re-solve of the optimal basis.
//! * [`solve_socp`]: second-order cone programs, handed to the Clarabel
//!   interior-point method. Residuals and infeasibility certificates are
//!   recomputed here from the returned primal/dual pair.
//!
//! Both entry points are deterministic: the same spec and tolerances give the
//! same status and bitwise-identical points.

mod lp;
mod socp;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use lp::solve_lp;
pub use socp::solve_socp;

#[derive(Debug, thiserror::Error)]
pub enum ConicError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("failed to write debug dump: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to serialize debug dump: {0}")]
    Serialize(#[from] serde_json::Error),
}

/// Termination status shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverTolerances {
    /// Constraint satisfaction accepted on returned points.
    pub feas_tol: f64,
    /// Optimality (duality gap / KKT residual) target.
    pub opt_tol: f64,
    /// Iteration cap. `None` picks a size-dependent default for the simplex
    /// and 200 for the interior-point method.
    pub max_iter: Option<usize>,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            feas_tol: 1e-6,
            opt_tol: 1e-8,
            max_iter: None,
        }
    }
}

/// `min objective·z  s.t.  rows·z ≤ rhs,  lower ≤ z ≤ upper`.
///
/// Bounds may be infinite. Rows are dense; the programs built by the toolkit
/// have at most a few hundred columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgramSpec {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgramSpec {
    /// A program over `objective.len()` free variables with no rows.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            rhs: Vec::new(),
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.rows.push(coeffs);
        self.rhs.push(rhs);
    }

    /// Adds `Σ coeff·z[idx] ≤ rhs` from sparse entries; repeated indices add up.
    pub fn add_sparse_row(&mut self, entries: &[(usize, f64)], rhs: f64) {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, v) in entries {
            row[j] += v;
        }
        self.add_row(row, rhs);
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(ConicError::DimensionMismatch(format!(
                "{} variables but {} lower / {} upper bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.rows.len() != self.rhs.len() {
            return Err(ConicError::DimensionMismatch(format!(
                "{} rows but {} right-hand sides",
                self.rows.len(),
                self.rhs.len()
            )));
        }
        if let Some((i, r)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(ConicError::DimensionMismatch(format!(
                "row {} has {} entries, expected {}",
                i,
                r.len(),
                n
            )));
        }
        Ok(())
    }

    /// Largest violation of rows and bounds at `z`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, &b) in self.rows.iter().zip(&self.rhs) {
            worst = worst.max(dot(row, z) - b);
        }
        for ((&v, &lo), &hi) in z.iter().zip(&self.lower).zip(&self.upper) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }

    pub fn objective_value(&self, z: &[f64]) -> f64 {
        dot(&self.objective, z)
    }

    /// Writes the program as JSON for cross-checking with external solvers.
    pub fn dump_json(&self, path: impl AsRef<Path>) -> Result<(), ConicError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// One second-order cone block `‖F z + f‖₂ ≤ g·z + h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeBlock {
    pub f_rows: Vec<Vec<f64>>,
    pub f_const: Vec<f64>,
    pub g: Vec<f64>,
    pub h: f64,
}

impl ConeBlock {
    /// `‖F z + f‖ − (g·z + h)`; non-positive when the block is satisfied.
    pub fn violation(&self, z: &[f64]) -> f64 {
        let norm = self
            .f_rows
            .iter()
            .zip(&self.f_const)
            .map(|(r, f)| {
                let v = dot(r, z) + f;
                v * v
            })
            .sum::<f64>()
            .sqrt();
        norm - (dot(&self.g, z) + self.h)
    }
}

/// A linear program plus second-order cone blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocpSpec {
    pub linear: LinearProgramSpec,
    pub cones: Vec<ConeBlock>,
}

impl SocpSpec {
    pub fn new(linear: LinearProgramSpec) -> Self {
        Self {
            linear,
            cones: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.linear.num_vars()
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        self.linear.validate()?;
        let n = self.num_vars();
        for (k, c) in self.cones.iter().enumerate() {
            if c.f_rows.is_empty() {
                return Err(ConicError::DimensionMismatch(format!(
                    "cone block {k} has no rows"
                )));
            }
            if c.f_rows.len() != c.f_const.len()
                || c.g.len() != n
                || c.f_rows.iter().any(|r| r.len() != n)
            {
                return Err(ConicError::DimensionMismatch(format!(
                    "cone block {k} does not match {n} variables"
                )));
            }
        }
        Ok(())
    }

    pub fn max_violation(&self, z: &[f64]) -> f64 {
        self.cones
            .iter()
            .map(|c| c.violation(z))
            .fold(self.linear.max_violation(z), f64::max)
    }

    pub fn dump_json(&self, path: impl AsRef<Path>) -> Result<(), ConicError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Primal point; empty unless `status` is `Optimal` or `IterationLimit`.
    pub point: Vec<f64>,
    pub objective: f64,
    /// Objective of the dual certificate (LP: Lagrangian dual of rows and
    /// bounds; SOCP: `-bᵀy` of the conic dual).
    pub dual_objective: f64,
    /// Multipliers of the linear rows, in row order, nonnegative.
    pub row_duals: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn gap(&self) -> f64 {
        (self.objective - self.dual_objective).abs()
    }

    pub(crate) fn without_point(status: SolveStatus, iterations: usize) -> Self {
        Self {
            status,
            point: Vec::new(),
            objective: f64::NAN,
            dual_objective: f64::NAN,
            row_duals: Vec::new(),
            primal_residual: f64::NAN,
            dual_residual: f64::NAN,
            iterations,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
