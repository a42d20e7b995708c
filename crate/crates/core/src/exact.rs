//! Exact oracles for small instances.
//!
//! A point is chance-feasible iff the scenarios it satisfies carry mass at
//! least `1 − ε`, so the optimum is the best LP over inclusion-minimal
//! satisfied sets. Supersets only add rows and never help.

use rayon::prelude::*;
use scvar_conic::{solve_lp, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::error::{status_error, Error, Result};
use crate::model::{CcpInstance, Tolerances};

pub const DEFAULT_MAX_SCENARIOS: usize = 20;

/// Mass slack when comparing against `1 − ε`.
const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub v_star: f64,
    pub x_star: Vec<f64>,
    /// Scenarios with `g_i(x*) ≤ feas_tol`.
    pub satisfied_set: Vec<usize>,
    pub subproblems_solved: usize,
}

/// Inclusion-minimal index sets with mass `≥ 1 − ε`, in lexicographic order.
pub fn minimal_satisfied_sets(probs: &[f64], epsilon: f64) -> Vec<Vec<usize>> {
    let need = 1.0 - epsilon - MASS_TOL;
    let mut out = Vec::new();
    let mut current = Vec::new();
    // Sets are extended in increasing index order; minimality is checked on
    // the finished set.
    fn walk(
        probs: &[f64],
        need: f64,
        start: usize,
        mass: f64,
        current: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if mass >= need {
            if current.iter().all(|&i| mass - probs[i] < need) {
                out.push(current.clone());
            }
            return;
        }
        for i in start..probs.len() {
            current.push(i);
            walk(probs, need, i + 1, mass + probs[i], current, out);
            current.pop();
        }
    }
    walk(probs, need, 0, 0.0, &mut current, &mut out);
    out
}

fn solve_subset(
    inst: &CcpInstance,
    subset: &[usize],
    tol: &Tolerances,
) -> Result<Option<Vec<f64>>> {
    let mut lp = inst.base_lp(0);
    for &i in subset {
        let sc = &inst.scenarios[i];
        for (w, d) in sc.w.iter().zip(&sc.d) {
            lp.add_row(w.clone(), -d);
        }
    }
    let res = solve_lp(&lp, &tol.solver());
    match res.status {
        SolveStatus::Optimal => Ok(Some(res.point)),
        SolveStatus::Infeasible => Ok(None),
        SolveStatus::Unbounded => Err(Error::Unbounded),
        other => Err(status_error(other)),
    }
}

fn satisfied(inst: &CcpInstance, x: &[f64], feas_tol: f64) -> Vec<usize> {
    inst.g_max_all(x)
        .iter()
        .enumerate()
        .filter(|(_, &g)| g <= feas_tol)
        .map(|(i, _)| i)
        .collect()
}

/// Enumerates the minimal satisfied sets and solves one LP per set.
pub fn brute_force_optimal(
    inst: &CcpInstance,
    max_scenarios: usize,
    tol: &Tolerances,
) -> Result<ExactResult> {
    inst.validate()?;
    let big_n = inst.num_scenarios();
    if big_n > max_scenarios {
        return Err(Error::TooLarge {
            n: big_n,
            cap: max_scenarios,
        });
    }
    let subsets = minimal_satisfied_sets(&inst.probs(), inst.epsilon);
    let solved: Vec<Result<Option<Vec<f64>>>> = subsets
        .par_iter()
        .map(|s| solve_subset(inst, s, tol))
        .collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for r in solved {
        if let Some(x) = r? {
            let v = inst.objective(&x);
            if best.as_ref().is_none_or(|(bv, _)| v < bv - 1e-9) {
                best = Some((v, x));
            }
        }
    }
    let (v_star, x_star) = best.ok_or(Error::Infeasible)?;
    Ok(ExactResult {
        satisfied_set: satisfied(inst, &x_star, tol.feas_tol),
        v_star,
        x_star,
        subproblems_solved: subsets.len(),
    })
}

/// Best chance-feasible point among explicit candidates.
pub fn grid_brute_force(
    inst: &CcpInstance,
    candidates: &[Vec<f64>],
    tol: &Tolerances,
) -> Result<ExactResult> {
    if candidates.is_empty() {
        return Err(Error::ConfigError("no candidate points".into()));
    }
    let mut best: Option<(f64, &Vec<f64>)> = None;
    for x in candidates {
        if !inst.domain.contains(x, tol.feas_tol) {
            return Err(Error::ConfigError(format!(
                "candidate {x:?} lies outside X"
            )));
        }
        if inst.chance_feasible(x, tol.feas_tol)? {
            let v = inst.objective(x);
            if best.is_none_or(|(bv, _)| v < bv) {
                best = Some((v, x));
            }
        }
    }
    let (v_star, x) = best.ok_or(Error::Infeasible)?;
    Ok(ExactResult {
        v_star,
        x_star: x.clone(),
        satisfied_set: satisfied(inst, x, tol.feas_tol),
        subproblems_solved: candidates.len(),
    })
}
