//! Objective-budget bisection with a CVaR-loss lower level.
//!
//! For a budget `t` the lower level minimizes `εβ + Σ p_i [g_i(x) − β]₊` over
//! `x ∈ X`, `β ≤ 0`, `cᵀx ≤ t`. A chance-feasible lower-level point moves the
//! upper bound down to `t`; otherwise the lower bound moves up.

use scvar_conic::{solve_lp, LinearProgramSpec, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::error::{status_error, Error, Result};
use crate::model::{CcpInstance, Tolerances, BETA_FLOOR};
use crate::scaling::{algorithm1, Algorithm1Options};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerLevel {
    pub x: Vec<f64>,
    pub beta: f64,
    /// Optimal hinge value.
    pub objective: f64,
}

/// Hinge LP over `[x (n), β, s (N), extra…]`; the objective is left on the
/// hinge columns.
fn hinge_lp(inst: &CcpInstance, t: f64, extra: usize) -> LinearProgramSpec {
    let n = inst.n();
    let big_n = inst.num_scenarios();
    let beta = n;
    let width = n + 1 + big_n + extra;
    let mut lp = inst.base_lp(1 + big_n + extra);
    let mut obj = vec![0.0; width];
    obj[beta] = inst.epsilon;
    for (i, sc) in inst.scenarios.iter().enumerate() {
        obj[beta + 1 + i] = sc.p;
    }
    lp.objective = obj;
    lp.set_bounds(beta, BETA_FLOOR, 0.0);
    for i in 0..big_n {
        lp.set_bounds(beta + 1 + i, 0.0, f64::INFINITY);
    }
    for (i, sc) in inst.scenarios.iter().enumerate() {
        for (w, d) in sc.w.iter().zip(&sc.d) {
            let mut row = w.clone();
            row.resize(width, 0.0);
            row[beta] = -1.0;
            row[beta + 1 + i] = -1.0;
            lp.add_row(row, -d);
        }
    }
    if t.is_finite() {
        let mut row = inst.cost.clone();
        row.resize(width, 0.0);
        lp.add_row(row, t);
    }
    lp
}

/// Solves the budgeted hinge LP. `t = +∞` drops the budget row.
pub fn lower_level(inst: &CcpInstance, t: f64, tol: &Tolerances) -> Result<LowerLevel> {
    let n = inst.n();
    let res = solve_lp(&hinge_lp(inst, t, 0), &tol.solver());
    match res.status {
        SolveStatus::Optimal => Ok(LowerLevel {
            x: res.point[..n].to_vec(),
            beta: res.point[n],
            objective: res.objective,
        }),
        SolveStatus::Infeasible => Err(Error::Infeasible),
        other => Err(status_error(other)),
    }
}

/// Scenarios tried by [`face_probe`] after a failed check.
const FACE_PROBES: usize = 4;

/// The hinge argmin is often a face. When the returned vertex fails the
/// check, minimize single scenarios' `g` over that face, nearest-to-satisfied
/// first, and return the first chance-feasible point found.
fn face_probe(
    inst: &CcpInstance,
    t: f64,
    low: &LowerLevel,
    tol: &Tolerances,
) -> Result<Option<Vec<f64>>> {
    let n = inst.n();
    let big_n = inst.num_scenarios();
    let g = inst.g_max_all(&low.x);
    let mut order: Vec<usize> = (0..big_n).filter(|&i| g[i] > tol.feas_tol).collect();
    order.sort_by(|&a, &b| g[a].total_cmp(&g[b]).then(a.cmp(&b)));
    let z = n + 1 + big_n;
    let mut face = hinge_lp(inst, t, 1);
    let hinge = std::mem::replace(&mut face.objective, vec![0.0; z + 1]);
    face.objective[z] = 1.0;
    face.add_row(hinge, low.objective + 1e-9 * (1.0 + low.objective.abs()));
    for &i in order.iter().take(FACE_PROBES) {
        let mut lp = face.clone();
        let sc = &inst.scenarios[i];
        for (w, d) in sc.w.iter().zip(&sc.d) {
            let mut row = w.clone();
            row.resize(z + 1, 0.0);
            row[z] = -1.0;
            lp.add_row(row, -d);
        }
        let res = solve_lp(&lp, &tol.solver());
        if res.status != SolveStatus::Optimal {
            continue;
        }
        let x = res.point[..n].to_vec();
        if inst.chance_feasible(&x, tol.feas_tol)? {
            return Ok(Some(x));
        }
    }
    Ok(None)
}

/// `min cᵀx` over `X` alone.
pub fn cost_lower_bound(inst: &CcpInstance, tol: &Tolerances) -> Result<f64> {
    let res = solve_lp(&inst.base_lp(0), &tol.solver());
    match res.status {
        SolveStatus::Optimal => Ok(res.objective),
        SolveStatus::Infeasible => Err(Error::Infeasible),
        SolveStatus::Unbounded => Ok(f64::NEG_INFINITY),
        other => Err(status_error(other)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionStep {
    pub t: f64,
    /// Hinge value, absent when the budget row cuts off `X`.
    pub lower_objective: Option<f64>,
    pub feasible: bool,
    /// The scaling heuristic produced the accepted point.
    pub rescued: bool,
    pub t_lower: f64,
    pub t_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BisectionReport {
    pub steps: Vec<BisectionStep>,
    pub x: Vec<f64>,
    pub objective: f64,
    pub t_lower: f64,
    pub t_upper: f64,
    pub initial_t_lower: f64,
    pub initial_t_upper: f64,
}

impl BisectionReport {
    /// `⌈log₂((t_U − t_L)/δ_A)⌉` for the initial bounds.
    pub fn step_bound(&self, delta_a: f64) -> usize {
        let ratio = (self.initial_t_upper - self.initial_t_lower) / delta_a;
        if ratio <= 1.0 {
            0
        } else {
            ratio.log2().ceil() as usize
        }
    }
}

/// Outcome of checking one budget.
struct Verdict {
    lower_objective: Option<f64>,
    accepted: Option<Vec<f64>>,
    rescued: bool,
}

fn check_budget(inst: &CcpInstance, t: f64, tol: &Tolerances, scaled: bool) -> Result<Verdict> {
    let low = match lower_level(inst, t, tol) {
        Ok(l) => l,
        Err(Error::Infeasible) => {
            return Ok(Verdict {
                lower_objective: None,
                accepted: None,
                rescued: false,
            })
        }
        Err(e) => return Err(e),
    };
    if inst.chance_feasible(&low.x, tol.feas_tol)? {
        return Ok(Verdict {
            lower_objective: Some(low.objective),
            accepted: Some(low.x),
            rescued: false,
        });
    }
    let mut accepted = face_probe(inst, t, &low, tol)?;
    let mut rescued = false;
    if accepted.is_none() && scaled {
        let opts = Algorithm1Options {
            budget: Some(t),
            ..Default::default()
        };
        // A failed heuristic run only means this budget is rejected.
        if let Ok(trace) = algorithm1(inst, &low.x, tol, &opts) {
            if trace.incumbent.feasible {
                accepted = Some(trace.incumbent.x);
                rescued = true;
            }
        }
    }
    Ok(Verdict {
        lower_objective: Some(low.objective),
        accepted,
        rescued,
    })
}

fn bisect(
    inst: &CcpInstance,
    t_lower: Option<f64>,
    t_upper: f64,
    tol: &Tolerances,
    scaled: bool,
) -> Result<BisectionReport> {
    inst.validate()?;
    tol.validate()?;
    let mut t_l = match t_lower {
        Some(t) => t,
        None => cost_lower_bound(inst, tol)?,
    };
    let mut t_u = t_upper;
    if !(t_l <= t_u) || !t_u.is_finite() {
        return Err(Error::ConfigError(format!(
            "bisection bounds must satisfy t_L <= t_U < inf, got [{t_l}, {t_u}]"
        )));
    }
    if !t_l.is_finite() {
        return Err(Error::ConfigError(
            "cost is unbounded below over X; supply t_L".into(),
        ));
    }
    let first = check_budget(inst, t_u, tol, scaled)?;
    let mut x = first.accepted.ok_or(Error::NoFeasibleIncumbent)?;
    let (init_l, init_u) = (t_l, t_u);
    let mut steps = Vec::new();
    while t_u - t_l > tol.delta_a {
        let t = 0.5 * (t_l + t_u);
        let v = check_budget(inst, t, tol, scaled)?;
        let feasible = v.accepted.is_some();
        if let Some(xa) = v.accepted {
            x = xa;
            t_u = t;
        } else {
            t_l = t;
        }
        steps.push(BisectionStep {
            t,
            lower_objective: v.lower_objective,
            feasible,
            rescued: v.rescued,
            t_lower: t_l,
            t_upper: t_u,
        });
    }
    Ok(BisectionReport {
        steps,
        objective: inst.objective(&x),
        x,
        t_lower: t_l,
        t_upper: t_u,
        initial_t_lower: init_l,
        initial_t_upper: init_u,
    })
}

/// Plain bisection. `t_lower = None` uses [`cost_lower_bound`].
pub fn alsox_sharp(
    inst: &CcpInstance,
    t_lower: Option<f64>,
    t_upper: f64,
    tol: &Tolerances,
) -> Result<BisectionReport> {
    bisect(inst, t_lower, t_upper, tol, false)
}

/// Bisection where a rejected lower-level point is handed to the scaling
/// heuristic under the same budget before the budget is given up.
pub fn scaled_alsox_sharp(
    inst: &CcpInstance,
    t_lower: Option<f64>,
    t_upper: f64,
    tol: &Tolerances,
) -> Result<BisectionReport> {
    bisect(inst, t_lower, t_upper, tol, true)
}
