//! CVaR inner approximations as linear programs.
//!
//! Column layout of every LP here: `[x (n), β, s (N)]`. Scenario rows read
//! `α_i (w_ij·x + d_ij) ≤ s_i + β` and the risk row is `εβ + Σ p_i s_i ≤ 0`.

use scvar_conic::{solve_lp, LinearProgramSpec, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::error::{status_error, Error, Result};
use crate::model::{dot, CcpInstance, ScalingVector, Tolerances, BETA_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CvarStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvarSolution {
    pub x: Vec<f64>,
    pub beta: f64,
    pub s: Vec<f64>,
    pub alpha: Vec<f64>,
    /// `+∞` when infeasible.
    pub objective: f64,
    pub status: CvarStatus,
    /// `β` sits on its artificial floor.
    pub beta_floor_active: bool,
}

impl CvarSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == CvarStatus::Optimal
    }

    fn infeasible(alpha: &[f64]) -> Self {
        Self {
            x: Vec::new(),
            beta: f64::NAN,
            s: Vec::new(),
            alpha: alpha.to_vec(),
            objective: f64::INFINITY,
            status: CvarStatus::Infeasible,
            beta_floor_active: false,
        }
    }
}

/// The scaled CVaR LP, optionally with the budget row `cᵀx ≤ budget`.
pub(crate) fn scaled_cvar_lp(
    inst: &CcpInstance,
    alpha: &[f64],
    budget: Option<f64>,
) -> LinearProgramSpec {
    let n = inst.n();
    let big_n = inst.num_scenarios();
    let beta = n;
    let mut lp = inst.base_lp(1 + big_n);
    lp.set_bounds(beta, BETA_FLOOR, 0.0);
    for i in 0..big_n {
        lp.set_bounds(beta + 1 + i, 0.0, f64::INFINITY);
    }
    let mut risk = vec![0.0; n + 1 + big_n];
    risk[beta] = inst.epsilon;
    for (i, sc) in inst.scenarios.iter().enumerate() {
        risk[beta + 1 + i] = sc.p;
    }
    lp.add_row(risk, 0.0);
    for (i, sc) in inst.scenarios.iter().enumerate() {
        let a = alpha[i];
        for (w, d) in sc.w.iter().zip(&sc.d) {
            let mut row: Vec<f64> = w.iter().map(|v| a * v).collect();
            row.resize(n + 1 + big_n, 0.0);
            row[beta] = -1.0;
            row[beta + 1 + i] = -1.0;
            lp.add_row(row, -a * d);
        }
    }
    if let Some(t) = budget.filter(|t| t.is_finite()) {
        let mut row = inst.cost.clone();
        row.resize(n + 1 + big_n, 0.0);
        lp.add_row(row, t);
    }
    lp
}

pub(crate) fn solve_scaled_cvar_budget(
    inst: &CcpInstance,
    alpha: &[f64],
    budget: Option<f64>,
    tol: &Tolerances,
) -> Result<CvarSolution> {
    if alpha.len() != inst.num_scenarios() {
        return Err(Error::DimensionMismatch(format!(
            "{} scaling factors for {} scenarios",
            alpha.len(),
            inst.num_scenarios()
        )));
    }
    let lp = scaled_cvar_lp(inst, alpha, budget);
    let res = solve_lp(&lp, &tol.solver());
    match res.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Ok(CvarSolution::infeasible(alpha)),
        other => return Err(status_error(other)),
    }
    let n = inst.n();
    let x = res.point[..n].to_vec();
    let beta = res.point[n];
    Ok(CvarSolution {
        objective: dot(&inst.cost, &x),
        x,
        beta,
        s: res.point[n + 1..].to_vec(),
        alpha: alpha.to_vec(),
        status: CvarStatus::Optimal,
        beta_floor_active: beta <= BETA_FLOOR + 1.0,
    })
}

pub fn solve_cvar(inst: &CcpInstance, tol: &Tolerances) -> Result<CvarSolution> {
    solve_scaled_cvar_budget(inst, &vec![1.0; inst.num_scenarios()], None, tol)
}

pub fn solve_scaled_cvar(
    inst: &CcpInstance,
    alpha: &ScalingVector,
    tol: &Tolerances,
) -> Result<CvarSolution> {
    solve_scaled_cvar_budget(inst, alpha.as_slice(), None, tol)
}

/// `(α, β, s)` making a fixed `x` feasible for the scaled CVaR constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledTriple {
    pub alpha: Vec<f64>,
    pub beta: f64,
    pub s: Vec<f64>,
}

/// Finds the feasible triple at `x` with the smallest `Σ α_i`, `α ≤ alpha_max`.
pub fn scaled_feasibility_at_x(
    inst: &CcpInstance,
    x: &[f64],
    tol: &Tolerances,
) -> Result<Option<ScaledTriple>> {
    let big_n = inst.num_scenarios();
    let g: Vec<Vec<f64>> = (0..big_n)
        .map(|i| inst.evaluate_g(i, x))
        .collect::<Result<_>>()?;
    // Columns: [α (N), β, s (N)].
    let beta = big_n;
    let width = 2 * big_n + 1;
    let mut obj = vec![0.0; width];
    obj[..big_n].iter_mut().for_each(|v| *v = 1.0);
    let mut lp = LinearProgramSpec::new(obj);
    for i in 0..big_n {
        lp.set_bounds(i, 1.0, tol.alpha_max);
        lp.set_bounds(beta + 1 + i, 0.0, f64::INFINITY);
    }
    lp.set_bounds(beta, BETA_FLOOR, 0.0);
    let mut risk = vec![0.0; width];
    risk[beta] = inst.epsilon;
    for (i, sc) in inst.scenarios.iter().enumerate() {
        risk[beta + 1 + i] = sc.p;
    }
    lp.add_row(risk, 0.0);
    for (i, gi) in g.iter().enumerate() {
        for &gij in gi {
            lp.add_sparse_row(&[(i, gij), (beta, -1.0), (beta + 1 + i, -1.0)], 0.0);
        }
    }
    let res = solve_lp(&lp, &tol.solver());
    match res.status {
        SolveStatus::Optimal => Ok(Some(ScaledTriple {
            alpha: res.point[..big_n]
                .iter()
                .map(|a| a.clamp(1.0, tol.alpha_max))
                .collect(),
            beta: res.point[beta],
            s: res.point[beta + 1..].to_vec(),
        })),
        SolveStatus::Infeasible => Ok(None),
        other => Err(status_error(other)),
    }
}

/// `min_β β + ε⁻¹ Σ p_i [g_i(x) − β]₊` over the breakpoints `β ∈ {g_i}`.
pub fn evaluate_cvar_at_x(inst: &CcpInstance, x: &[f64]) -> Result<f64> {
    if x.len() != inst.n() {
        return Err(Error::DimensionMismatch(format!(
            "decision has {} entries, expected {}",
            x.len(),
            inst.n()
        )));
    }
    let g = inst.g_max_all(x);
    let p = inst.probs();
    Ok(cvar_of_discrete(&g, &p, inst.epsilon))
}

pub(crate) fn cvar_of_discrete(values: &[f64], probs: &[f64], eps: f64) -> f64 {
    values
        .iter()
        .map(|&beta| {
            let tail: f64 = values
                .iter()
                .zip(probs)
                .map(|(&v, &p)| p * (v - beta).max(0.0))
                .sum();
            beta + tail / eps
        })
        .fold(f64::INFINITY, f64::min)
}
