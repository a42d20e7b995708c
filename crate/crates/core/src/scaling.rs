//! Closed-form scaling at a known point, the iterative scaling heuristic, and
//! bound-based pinning of scaling factors.

use rayon::prelude::*;
use scvar_conic::{solve_lp, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::cvar::solve_scaled_cvar_budget;
use crate::error::{status_error, Error, Result};
use crate::model::{CcpInstance, ScalingVector, Tolerances};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionOutput {
    pub alpha_hat: ScalingVector,
    pub beta_hat: f64,
    pub s_hat: Vec<f64>,
    /// Probability mass outside the strictly satisfied set.
    pub tau: f64,
    pub alpha_bar: f64,
    /// Some `α̂_i` hit `alpha_max`.
    pub clipped: bool,
    /// `(x, β̂, ŝ, α̂)` satisfies every scaled CVaR constraint.
    pub verified: bool,
}

/// Builds `(α̂, β̂, ŝ)` at `x` from the set `I = {i : g_i(x) < strict_threshold}`.
///
/// With `τ = Σ_{i∉I} p_i` and `ᾱ = Σ_{i∉I} p_i g_i / (ε − τ)`, the factors are
/// `α̂_i = max(−ᾱ/g_i, 1)` on `I`, the multiplier is `β̂ = −ᾱ`, and the slacks
/// are `ŝ_i = g_i + ᾱ` off `I`. `ᾱ` is floored at zero, which only matters when
/// the threshold is negative and the unsatisfied mass has negative `g`.
pub fn theorem1_construct(
    inst: &CcpInstance,
    x_star: &[f64],
    strict_threshold: f64,
    tol: &Tolerances,
) -> Result<ConstructionOutput> {
    inst.check_x(x_star)?;
    let g = inst.g_max_all(x_star);
    let inside: Vec<bool> = g.iter().map(|&v| v < strict_threshold).collect();
    let mut tau = 0.0;
    let mut weighted = 0.0;
    for ((sc, &gi), &ins) in inst.scenarios.iter().zip(&g).zip(&inside) {
        if !ins {
            tau += sc.p;
            weighted += sc.p * gi;
        }
    }
    if tau >= inst.epsilon {
        return Err(Error::ConditionViolated {
            tau,
            epsilon: inst.epsilon,
        });
    }
    let alpha_bar = (weighted / (inst.epsilon - tau)).max(0.0);
    let mut clipped = false;
    let alpha: Vec<f64> = g
        .iter()
        .zip(&inside)
        .map(|(&gi, &ins)| {
            if !ins {
                return 1.0;
            }
            let a = (-alpha_bar / gi).max(1.0);
            if a > tol.alpha_max {
                clipped = true;
                tol.alpha_max
            } else {
                a
            }
        })
        .collect();
    let beta_hat = -alpha_bar;
    let s_hat: Vec<f64> = g
        .iter()
        .zip(&inside)
        .map(|(&gi, &ins)| if ins { 0.0 } else { (gi + alpha_bar).max(0.0) })
        .collect();

    let slack = 1e-9 * (1.0 + alpha_bar);
    let risk = inst.epsilon * beta_hat
        + inst
            .scenarios
            .iter()
            .zip(&s_hat)
            .map(|(sc, s)| sc.p * s)
            .sum::<f64>();
    let rows_ok = (0..g.len()).all(|i| s_hat[i] + beta_hat >= alpha[i] * g[i] - slack);
    Ok(ConstructionOutput {
        alpha_hat: ScalingVector::clamped(alpha, tol.alpha_max),
        beta_hat,
        s_hat,
        tau,
        alpha_bar,
        clipped,
        verified: rows_ok && risk <= slack,
    })
}

/// `(1 − ϵ) x* + (ϵ / |W|) Σ_{w∈W} w`.
pub fn theorem2_blend(x_star: &[f64], witnesses: &[Vec<f64>], eps_blend: f64) -> Result<Vec<f64>> {
    if witnesses.is_empty() {
        return Err(Error::DimensionMismatch("no witnesses to blend".into()));
    }
    if let Some(w) = witnesses.iter().find(|w| w.len() != x_star.len()) {
        return Err(Error::DimensionMismatch(format!(
            "witness has {} entries, expected {}",
            w.len(),
            x_star.len()
        )));
    }
    if !(eps_blend > 0.0 && eps_blend < 1.0) {
        return Err(Error::ConfigError(format!(
            "blend weight {eps_blend} is outside (0, 1)"
        )));
    }
    let k = witnesses.len() as f64;
    Ok((0..x_star.len())
        .map(|j| {
            let mean = witnesses.iter().map(|w| w[j]).sum::<f64>() / k;
            (1.0 - eps_blend) * x_star[j] + eps_blend * mean
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Fixed-`α` LP of the scaling heuristic.
    Heuristic,
    /// Convex (cone) subproblem.
    Convex,
    /// Fixed-`α` LP re-solve after the convex loop.
    PostStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub phase: Phase,
    pub objective: f64,
    pub x: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Objective change from the previous record; absent on the starting point.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub objective: f64,
    pub x: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Option<f64>,
    pub s: Vec<f64>,
    /// False only when no recorded point is chance-feasible.
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    Stalled,
    Infeasible,
    NumericalError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub incumbent: Incumbent,
    pub termination: Termination,
    /// Fixed-`α` re-solve at the end of the convex loop (hybrid method only).
    pub post_step_objective: Option<f64>,
    /// Some factor was capped at `alpha_max`.
    pub alpha_clipped: bool,
}

impl IterationTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }
}

/// Tracks the best chance-feasible point seen so far.
pub(crate) struct IncumbentTracker {
    best: Option<Incumbent>,
    fallback: Option<Incumbent>,
}

impl IncumbentTracker {
    pub(crate) fn new() -> Self {
        Self {
            best: None,
            fallback: None,
        }
    }

    pub(crate) fn offer(&mut self, inst: &CcpInstance, tol: &Tolerances, cand: Incumbent) {
        let feasible = inst.chance_feasible(&cand.x, tol.feas_tol).unwrap_or(false);
        let slot = if feasible {
            &mut self.best
        } else {
            &mut self.fallback
        };
        if slot.as_ref().is_none_or(|b| cand.objective < b.objective) {
            *slot = Some(Incumbent { feasible, ..cand });
        }
    }

    pub(crate) fn finish(self) -> Incumbent {
        self.best
            .or(self.fallback)
            .expect("at least one point is always recorded")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Algorithm1Options {
    /// `true` pins `α_i = 1`.
    pub fixed_mask: Option<Vec<bool>>,
    /// Factors carried into the first update (all ones when absent).
    pub initial_alpha: Option<Vec<f64>>,
    /// Extra row `cᵀx ≤ budget` in every LP.
    pub budget: Option<f64>,
}

/// Alternates the `α` update at the current point with a fixed-`α` LP solve.
///
/// Record 0 is the starting point. Each later record is one LP solve. The
/// loop stops when the objective moves by less than `delta1`, after
/// `max_iter` solves, or when the unsatisfied mass reaches `ε` (`Stalled`).
/// The incumbent is the best chance-feasible record.
pub fn algorithm1(
    inst: &CcpInstance,
    x0: &[f64],
    tol: &Tolerances,
    opts: &Algorithm1Options,
) -> Result<IterationTrace> {
    let big_n = inst.num_scenarios();
    inst.check_x(x0)?;
    let mask = opts
        .fixed_mask
        .clone()
        .unwrap_or_else(|| vec![false; big_n]);
    let mut alpha = opts
        .initial_alpha
        .clone()
        .unwrap_or_else(|| vec![1.0; big_n]);
    if mask.len() != big_n || alpha.len() != big_n {
        return Err(Error::DimensionMismatch(
            "mask or initial scaling does not match the scenario count".into(),
        ));
    }
    for (a, &m) in alpha.iter_mut().zip(&mask) {
        *a = if m { 1.0 } else { a.clamp(1.0, tol.alpha_max) };
    }

    let mut x = x0.to_vec();
    let mut objective = inst.objective(&x);
    let mut records = vec![IterationRecord {
        k: 0,
        phase: Phase::Heuristic,
        objective,
        x: x.clone(),
        alpha: alpha.clone(),
        delta: None,
    }];
    let mut tracker = IncumbentTracker::new();
    tracker.offer(
        inst,
        tol,
        Incumbent {
            objective,
            x: x.clone(),
            alpha: alpha.clone(),
            beta: None,
            s: Vec::new(),
            feasible: false,
        },
    );
    let mut clipped = false;
    let mut termination = Termination::MaxIter;

    for k in 1..=tol.max_iter {
        let g = inst.g_max_all(&x);
        let inside: Vec<bool> = g.iter().map(|&v| v < tol.delta2).collect();
        let (tau, weighted) = inst
            .scenarios
            .iter()
            .zip(&g)
            .zip(&inside)
            .filter(|(_, &ins)| !ins)
            .fold((0.0, 0.0), |(t, w), ((sc, &gi), _)| {
                (t + sc.p, w + sc.p * gi)
            });
        let margin = inst.epsilon - tau;
        if margin <= 1e-12 {
            termination = Termination::Stalled;
            break;
        }
        let alpha_bar = weighted / margin;
        let next: Vec<f64> = (0..big_n)
            .map(|i| {
                if mask[i] || !inside[i] {
                    return 1.0;
                }
                let a = (-alpha_bar / g[i]).max(1.0).max(alpha[i]);
                if a > tol.alpha_max {
                    clipped = true;
                }
                a.min(tol.alpha_max)
            })
            .collect();

        let sol = solve_scaled_cvar_budget(inst, &next, opts.budget, tol)?;
        if !sol.is_optimal() {
            if k == 1 {
                return Err(Error::Infeasible);
            }
            termination = Termination::Infeasible;
            break;
        }
        let delta = (objective - sol.objective).abs();
        records.push(IterationRecord {
            k,
            phase: Phase::Heuristic,
            objective: sol.objective,
            x: sol.x.clone(),
            alpha: next.clone(),
            delta: Some(delta),
        });
        tracker.offer(
            inst,
            tol,
            Incumbent {
                objective: sol.objective,
                x: sol.x.clone(),
                alpha: next.clone(),
                beta: Some(sol.beta),
                s: sol.s.clone(),
                feasible: false,
            },
        );
        x = sol.x;
        alpha = next;
        objective = sol.objective;
        if delta < tol.delta1 {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(IterationTrace {
        records,
        incumbent: tracker.finish(),
        termination,
        post_step_objective: None,
        alpha_clipped: clipped,
    })
}

/// `η_i = min cᵀx` over `X` with scenario `i` satisfied; `+∞` when empty.
pub fn eta_bounds(inst: &CcpInstance, tol: &Tolerances) -> Result<Vec<f64>> {
    (0..inst.num_scenarios())
        .into_par_iter()
        .map(|i| {
            let mut lp = inst.base_lp(0);
            let sc = &inst.scenarios[i];
            for (w, d) in sc.w.iter().zip(&sc.d) {
                lp.add_row(w.clone(), -d);
            }
            let res = solve_lp(&lp, &tol.solver());
            match res.status {
                SolveStatus::Optimal => Ok(res.objective),
                SolveStatus::Infeasible => Ok(f64::INFINITY),
                SolveStatus::Unbounded => Ok(f64::NEG_INFINITY),
                other => Err(status_error(other)),
            }
        })
        .collect()
}

/// `true` (pin `α_i = 1`) when `η_i > v_upper + feas_tol`.
pub fn prune_alpha_mask(eta: &[f64], v_upper: f64, feas_tol: f64) -> Vec<bool> {
    eta.iter().map(|&e| e > v_upper + feas_tol).collect()
}
