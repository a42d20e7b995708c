//! Finite-scenario chance-constrained programs in canonical affine form.
//!
//! Scenario `i` contributes rows `g_ij(x) = w_ij·x + d_ij`, and the scenario
//! is satisfied when `max_j g_ij(x) ≤ 0`. The program is
//! `min cᵀx  s.t.  x ∈ X,  Σ_i p_i 1[g_i(x) > 0] ≤ ε`.

use scvar_conic::{solve_lp, LinearProgramSpec, SolveStatus, SolverTolerances};
use serde::{Deserialize, Serialize};

use crate::error::{status_error, Error, Result};

/// Lower bound placed on the CVaR multiplier `β` in every LP.
pub const BETA_FLOOR: f64 = -1e9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// `J × n` constraint gradients.
    pub w: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub p: f64,
}

/// `lb ≤ x ≤ ub` and `P x ≤ q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
    pub p_rows: Vec<Vec<f64>>,
    pub q: Vec<f64>,
}

impl Domain {
    pub fn free(n: usize) -> Self {
        Self {
            lb: vec![f64::NEG_INFINITY; n],
            ub: vec![f64::INFINITY; n],
            p_rows: Vec::new(),
            q: Vec::new(),
        }
    }

    pub fn nonnegative(n: usize) -> Self {
        Self {
            lb: vec![0.0; n],
            ..Self::free(n)
        }
    }

    pub fn unit_box(n: usize) -> Self {
        Self {
            lb: vec![0.0; n],
            ub: vec![1.0; n],
            ..Self::free(n)
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        let bounds = x
            .iter()
            .zip(self.lb.iter().zip(&self.ub))
            .all(|(&v, (&l, &u))| v >= l - tol && v <= u + tol);
        bounds
            && self
                .p_rows
                .iter()
                .zip(&self.q)
                .all(|(row, &q)| dot(row, x) <= q + tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcpInstance {
    pub name: String,
    pub cost: Vec<f64>,
    pub scenarios: Vec<Scenario>,
    pub epsilon: f64,
    pub domain: Domain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta_bar: f64,
    pub alpha_max: f64,
    pub max_iter: usize,
    pub delta_a: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas_tol: 1e-6,
            opt_tol: 1e-8,
            delta1: 1e-4,
            delta2: -0.005,
            delta_bar: -1e-5,
            alpha_max: 1e6,
            max_iter: 25,
            delta_a: 0.05,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("feas_tol", self.feas_tol),
            ("opt_tol", self.opt_tol),
            ("delta1", self.delta1),
            ("delta_a", self.delta_a),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::ConfigError(format!(
                "{name} must be positive, got {v}"
            )));
        }
        if !(self.delta2 <= 0.0) {
            return Err(Error::ConfigError(format!(
                "delta2 must be <= 0, got {}",
                self.delta2
            )));
        }
        if !(self.delta_bar < 0.0) {
            return Err(Error::ConfigError(format!(
                "delta_bar must be < 0, got {}",
                self.delta_bar
            )));
        }
        if !(self.alpha_max >= 1.0) {
            return Err(Error::ConfigError(format!(
                "alpha_max must be >= 1, got {}",
                self.alpha_max
            )));
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverTolerances {
        SolverTolerances {
            feas_tol: self.feas_tol,
            opt_tol: self.opt_tol,
            max_iter: None,
        }
    }
}

/// Per-scenario factors `α_i ∈ [1, alpha_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalingVector {
    alpha: Vec<f64>,
}

impl ScalingVector {
    pub fn new(alpha: Vec<f64>, alpha_max: f64) -> Result<Self> {
        if let Some((index, &value)) = alpha
            .iter()
            .enumerate()
            .find(|(_, &a)| !(a >= 1.0 && a <= alpha_max))
        {
            return Err(Error::ScalingOutOfRange {
                index,
                value,
                max: alpha_max,
            });
        }
        Ok(Self { alpha })
    }

    pub fn ones(n: usize) -> Self {
        Self {
            alpha: vec![1.0; n],
        }
    }

    /// Clamps every entry into `[1, alpha_max]`.
    pub fn clamped(alpha: Vec<f64>, alpha_max: f64) -> Self {
        Self {
            alpha: alpha.into_iter().map(|a| a.clamp(1.0, alpha_max)).collect(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpsilonRegularity {
    /// No scenario subset has mass exactly `ε`.
    Pass,
    /// Some subset has mass `ε`; perturbing `ε` slightly is advised.
    PerturbationAdvised,
    Unknown,
}

impl CcpInstance {
    pub fn n(&self) -> usize {
        self.cost.len()
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    pub fn rows_per_scenario(&self) -> usize {
        self.scenarios.first().map_or(0, |s| s.d.len())
    }

    pub fn probs(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.p).collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.cost, x)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::DimensionMismatch("decision dimension is 0".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::DimensionMismatch("no scenarios".into()));
        }
        let j = self.rows_per_scenario();
        if j == 0 {
            return Err(Error::DimensionMismatch("scenarios have no rows".into()));
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            if s.w.len() != j || s.d.len() != j {
                return Err(Error::DimensionMismatch(format!(
                    "scenario {i} has {} gradient rows and {} offsets, expected {j}",
                    s.w.len(),
                    s.d.len()
                )));
            }
            if let Some(r) = s.w.iter().position(|r| r.len() != n) {
                return Err(Error::DimensionMismatch(format!(
                    "scenario {i} row {r} has {} entries, expected {n}",
                    s.w[r].len()
                )));
            }
            if !(s.p > 0.0 && s.p <= 1.0) {
                return Err(Error::ProbabilityError(format!(
                    "scenario {i} has probability {}",
                    s.p
                )));
            }
        }
        let total: f64 = self.scenarios.iter().map(|s| s.p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::ProbabilityError(format!(
                "probabilities sum to {total}"
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::RiskLevelError(self.epsilon));
        }
        let dom = &self.domain;
        if dom.lb.len() != n || dom.ub.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "domain has {} lower and {} upper bounds for {n} variables",
                dom.lb.len(),
                dom.ub.len()
            )));
        }
        if let Some(k) = (0..n).find(|&k| !(dom.lb[k] <= dom.ub[k])) {
            return Err(Error::DimensionMismatch(format!(
                "domain bound {k} has lb {} > ub {}",
                dom.lb[k], dom.ub[k]
            )));
        }
        if dom.p_rows.len() != dom.q.len() || dom.p_rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(
                "domain rows do not match their right-hand sides or n".into(),
            ));
        }
        Ok(())
    }

    pub fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "decision has {} entries, expected {}",
                x.len(),
                self.n()
            )));
        }
        Ok(())
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.num_scenarios() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.num_scenarios(),
            });
        }
        Ok(())
    }

    pub fn evaluate_g(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_index(i)?;
        self.check_x(x)?;
        let s = &self.scenarios[i];
        Ok(s.w.iter().zip(&s.d).map(|(w, d)| dot(w, x) + d).collect())
    }

    pub fn g_max(&self, i: usize, x: &[f64]) -> Result<f64> {
        Ok(self
            .evaluate_g(i, x)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// `g_max` for every scenario, assuming `x` has the right length.
    pub fn g_max_all(&self, x: &[f64]) -> Vec<f64> {
        self.scenarios
            .iter()
            .map(|s| {
                s.w.iter()
                    .zip(&s.d)
                    .map(|(w, d)| dot(w, x) + d)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    pub fn violation_probability(&self, x: &[f64], tol: f64) -> Result<f64> {
        self.check_x(x)?;
        Ok(self
            .g_max_all(x)
            .iter()
            .zip(&self.scenarios)
            .filter(|(g, _)| **g > tol)
            .map(|(_, s)| s.p)
            .sum())
    }

    pub fn chance_feasible(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.violation_probability(x, tol)? <= self.epsilon + 1e-9)
    }

    pub fn scale_scenarios(&self, alpha: &ScalingVector) -> Result<CcpInstance> {
        if alpha.len() != self.num_scenarios() {
            return Err(Error::DimensionMismatch(format!(
                "{} scaling factors for {} scenarios",
                alpha.len(),
                self.num_scenarios()
            )));
        }
        if let Some((index, &value)) = alpha.as_slice().iter().enumerate().find(|(_, &a)| a < 1.0) {
            return Err(Error::ScalingOutOfRange {
                index,
                value,
                max: f64::INFINITY,
            });
        }
        let mut out = self.clone();
        for (s, &a) in out.scenarios.iter_mut().zip(alpha.as_slice()) {
            s.w.iter_mut().flatten().for_each(|v| *v *= a);
            s.d.iter_mut().for_each(|v| *v *= a);
        }
        Ok(out)
    }

    /// Divides every row by its (positive) offset so that `d_ij = 1`.
    pub fn normalize_covering_rows(&self) -> Result<CcpInstance> {
        let mut out = self.clone();
        for (i, s) in out.scenarios.iter_mut().enumerate() {
            for (j, (w, d)) in s.w.iter_mut().zip(s.d.iter_mut()).enumerate() {
                if !(*d > 0.0) {
                    return Err(Error::NotCovering {
                        scenario: i,
                        row: j,
                        d: *d,
                    });
                }
                w.iter_mut().for_each(|v| *v /= *d);
                *d = 1.0;
            }
        }
        Ok(out)
    }

    /// A point of `X` with every scenario row at most `delta_bar`, if any.
    pub fn certificate_point(&self, delta_bar: f64, tol: &Tolerances) -> Result<Option<Vec<f64>>> {
        let mut lp = self.base_lp(0);
        lp.objective.iter_mut().for_each(|v| *v = 0.0);
        for s in &self.scenarios {
            for (w, d) in s.w.iter().zip(&s.d) {
                lp.add_row(w.clone(), delta_bar - d);
            }
        }
        let res = solve_lp(&lp, &tol.solver());
        match res.status {
            SolveStatus::Optimal => Ok(Some(res.point)),
            SolveStatus::Infeasible => Ok(None),
            other => Err(status_error(other)),
        }
    }

    pub fn epsilon_regularity_check(&self) -> EpsilonRegularity {
        let n = self.num_scenarios();
        let eps = self.epsilon;
        let uniform = 1.0 / n as f64;
        if self
            .scenarios
            .iter()
            .all(|s| (s.p - uniform).abs() <= 1e-12)
        {
            let k = n as f64 * eps;
            return if (k - k.round()).abs() <= 1e-9 {
                EpsilonRegularity::PerturbationAdvised
            } else {
                EpsilonRegularity::Pass
            };
        }
        if n > 20 {
            return EpsilonRegularity::Unknown;
        }
        let mut sums = vec![0.0_f64; 1 << n];
        for mask in 1usize..(1 << n) {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = sums[mask & (mask - 1)] + self.scenarios[low].p;
            if (sums[mask] - eps).abs() <= 1e-12 {
                return EpsilonRegularity::PerturbationAdvised;
            }
        }
        EpsilonRegularity::Pass
    }

    /// LP over `[x, extra…]` with cost `c` on `x`, the domain of `x`, and
    /// `extra` free zero-cost columns.
    pub(crate) fn base_lp(&self, extra: usize) -> LinearProgramSpec {
        let n = self.n();
        let mut obj = self.cost.clone();
        obj.resize(n + extra, 0.0);
        let mut lp = LinearProgramSpec::new(obj);
        for k in 0..n {
            lp.set_bounds(k, self.domain.lb[k], self.domain.ub[k]);
        }
        for (row, &q) in self.domain.p_rows.iter().zip(&self.domain.q) {
            let mut r = row.clone();
            r.resize(n + extra, 0.0);
            lp.add_row(r, q);
        }
        lp
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
