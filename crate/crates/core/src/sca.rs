//! Sequential convex approximation of the jointly scaled CVaR program.
//!
//! The bilinear row `α_i g_ij(x) ≤ s_i + β` is rewritten with
//! `4αg = (α + g)² − (α − g)²`. Replacing the concave part `−(α − g)²` by its
//! tangent at an anchor `(x_k, α_k)` gives the convex, conservative row
//! `(α_i + g_ij(x))² ≤ 4(s_i + β) + T_ij(x, α_i)`, encoded as one second-order
//! cone `‖(2q, 1 − r)‖ ≤ 1 + r` with `q = α_i + g_ij(x)` and `r` the right side.
//!
//! Column layout: `[x (n), β, s (N), α (N)]`.

use scvar_conic::{solve_socp, ConeBlock, SocpSpec, SolveStatus};
use serde::{Deserialize, Serialize};

use crate::cvar::{scaled_feasibility_at_x, solve_scaled_cvar_budget, ScaledTriple};
use crate::error::{Error, Result};
use crate::model::{dot, CcpInstance, Tolerances};
use crate::scaling::{
    algorithm1, Algorithm1Options, Incumbent, IncumbentTracker, IterationRecord, IterationTrace,
    Phase, Termination,
};

/// Tangent of `(α − w·x − d)²` at the anchor: with `a = α_k − g_k`,
/// `T(x, α) = a² + 2a(α − α_k) − 2a w·(x − x_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorRow {
    /// `α_k − g_ij(x_k)`.
    pub a: f64,
    pub alpha_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcLinearization {
    pub x_k: Vec<f64>,
    pub alpha_k: Vec<f64>,
    /// `rows[i][j]` linearizes scenario `i`, row `j`.
    pub rows: Vec<Vec<TaylorRow>>,
}

impl DcLinearization {
    pub fn new(inst: &CcpInstance, x_k: &[f64], alpha_k: &[f64]) -> Result<Self> {
        inst.check_x(x_k)?;
        if alpha_k.len() != inst.num_scenarios() {
            return Err(Error::DimensionMismatch(format!(
                "{} anchor factors for {} scenarios",
                alpha_k.len(),
                inst.num_scenarios()
            )));
        }
        let rows = inst
            .scenarios
            .iter()
            .zip(alpha_k)
            .map(|(sc, &ak)| {
                sc.w.iter()
                    .zip(&sc.d)
                    .map(|(w, d)| TaylorRow {
                        a: ak - (dot(w, x_k) + d),
                        alpha_k: ak,
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            x_k: x_k.to_vec(),
            alpha_k: alpha_k.to_vec(),
            rows,
        })
    }

    /// `T_ij(x, α_i)`.
    pub fn value(&self, inst: &CcpInstance, i: usize, j: usize, x: &[f64], alpha_i: f64) -> f64 {
        let t = &self.rows[i][j];
        let w = &inst.scenarios[i].w[j];
        let step: f64 = w
            .iter()
            .zip(x.iter().zip(&self.x_k))
            .map(|(wk, (xv, xk))| wk * (xv - xk))
            .sum();
        t.a * t.a + 2.0 * t.a * (alpha_i - t.alpha_k) - 2.0 * t.a * step
    }
}

/// Builds the convex subproblem anchored at `(x_k, α_k)`.
///
/// Scenarios with `relax[i]` get free `α_i ∈ [1, alpha_max]` and one cone per
/// row. The others have `α_i = 1` and plain linear rows, so an all-false mask
/// gives the plain CVaR LP.
pub fn dc_subproblem(
    inst: &CcpInstance,
    x_k: &[f64],
    alpha_k: &[f64],
    relax: &[bool],
    tol: &Tolerances,
) -> Result<SocpSpec> {
    let lin = DcLinearization::new(inst, x_k, alpha_k)?;
    let n = inst.n();
    let big_n = inst.num_scenarios();
    if relax.len() != big_n {
        return Err(Error::DimensionMismatch(format!(
            "relax mask has {} entries for {} scenarios",
            relax.len(),
            big_n
        )));
    }
    let beta = n;
    let s0 = n + 1;
    let a0 = n + 1 + big_n;
    let width = n + 1 + 2 * big_n;

    let mut lp = inst.base_lp(1 + 2 * big_n);
    lp.set_bounds(beta, f64::NEG_INFINITY, 0.0);
    for (i, &relaxed) in relax.iter().enumerate() {
        lp.set_bounds(s0 + i, 0.0, f64::INFINITY);
        if relaxed {
            lp.set_bounds(a0 + i, 1.0, tol.alpha_max);
        } else {
            lp.set_bounds(a0 + i, 1.0, 1.0);
        }
    }
    let mut risk = vec![0.0; width];
    risk[beta] = inst.epsilon;
    for (i, sc) in inst.scenarios.iter().enumerate() {
        risk[s0 + i] = sc.p;
    }
    lp.add_row(risk, 0.0);

    let mut cones = Vec::new();
    for (i, sc) in inst.scenarios.iter().enumerate() {
        for (j, (w, &d)) in sc.w.iter().zip(&sc.d).enumerate() {
            if !relax[i] {
                let mut row = w.clone();
                row.resize(width, 0.0);
                row[beta] = -1.0;
                row[s0 + i] = -1.0;
                lp.add_row(row, -d);
                continue;
            }
            let t = &lin.rows[i][j];
            // q = α_i + w·x + d
            let mut qz = w.clone();
            qz.resize(width, 0.0);
            qz[a0 + i] = 1.0;
            let q0 = d;
            // r = 4(s_i + β) + 2a α_i − 2a w·x + a² − 2a α_k + 2a w·x_k
            let mut rz: Vec<f64> = w.iter().map(|v| -2.0 * t.a * v).collect();
            rz.resize(width, 0.0);
            rz[beta] = 4.0;
            rz[s0 + i] = 4.0;
            rz[a0 + i] = 2.0 * t.a;
            let r0 = t.a * t.a - 2.0 * t.a * t.alpha_k + 2.0 * t.a * dot(w, x_k);
            cones.push(ConeBlock {
                f_rows: vec![
                    qz.iter().map(|v| 2.0 * v).collect(),
                    rz.iter().map(|v| -v).collect(),
                ],
                f_const: vec![2.0 * q0, 1.0 - r0],
                g: rz,
                h: 1.0 + r0,
            });
        }
    }
    Ok(SocpSpec { linear: lp, cones })
}

/// Turns a cone-program point into an exactly certified iterate.
///
/// Interior-point solutions may sit anywhere in a flat range of `α`, so the
/// iterate is re-anchored at the smallest factors that certify it. When the
/// point is only feasible to solver precision and no factors certify it, it is
/// replaced by the fixed-`α` LP optimum at the solver's (clamped) factors.
fn certify(
    inst: &CcpInstance,
    point: &[f64],
    tol: &Tolerances,
) -> Option<(Vec<f64>, ScaledTriple)> {
    let n = inst.n();
    let big_n = inst.num_scenarios();
    let x = point[..n].to_vec();
    if let Ok(Some(t)) = scaled_feasibility_at_x(inst, &x, tol) {
        return Some((x, t));
    }
    let alpha: Vec<f64> = point[n + 1 + big_n..]
        .iter()
        .map(|a| a.clamp(1.0, tol.alpha_max))
        .collect();
    let sol = solve_scaled_cvar_budget(inst, &alpha, None, tol)
        .ok()
        .filter(|s| s.is_optimal())?;
    let trip = match scaled_feasibility_at_x(inst, &sol.x, tol) {
        Ok(Some(t)) => t,
        _ => ScaledTriple {
            alpha,
            beta: sol.beta,
            s: sol.s,
        },
    };
    Some((sol.x, trip))
}

struct ScaLoop {
    records: Vec<IterationRecord>,
    tracker: IncumbentTracker,
    termination: Termination,
    x: Vec<f64>,
    alpha: Vec<f64>,
}

/// Shared convex loop. `hybrid` restricts relaxation to `{i : g_i(x_k) < δ2}`.
fn sca_loop(inst: &CcpInstance, x0: &[f64], tol: &Tolerances, hybrid: bool) -> Result<ScaLoop> {
    inst.check_x(x0)?;
    let big_n = inst.num_scenarios();
    let mut x = x0.to_vec();
    let mut alpha = vec![1.0; big_n];
    let mut objective = inst.objective(&x);
    let mut records = vec![IterationRecord {
        k: 0,
        phase: Phase::Convex,
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
    let mut termination = Termination::MaxIter;

    for k in 1..=tol.max_iter {
        let relax: Vec<bool> = if hybrid {
            inst.g_max_all(&x).iter().map(|&g| g < tol.delta2).collect()
        } else {
            vec![true; big_n]
        };
        let spec = dc_subproblem(inst, &x, &alpha, &relax, tol)?;
        let res = solve_socp(&spec, &tol.solver());
        match res.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible if k == 1 => return Err(Error::Infeasible),
            SolveStatus::Infeasible => {
                termination = Termination::Infeasible;
                break;
            }
            _ => {
                termination = Termination::NumericalError;
                break;
            }
        }
        let Some((x_new, trip)) = certify(inst, &res.point, tol) else {
            termination = Termination::NumericalError;
            break;
        };
        let (alpha_new, beta_new, s_new) = (trip.alpha, trip.beta, trip.s);
        let obj_new = inst.objective(&x_new);
        if obj_new > objective {
            // The anchor is feasible for this subproblem, so a worse point is
            // solver noise; keep the anchor and stop.
            records.push(IterationRecord {
                k,
                phase: Phase::Convex,
                objective,
                x: x.clone(),
                alpha: alpha.clone(),
                delta: Some(0.0),
            });
            termination = Termination::Converged;
            break;
        }
        let delta = (objective - obj_new).abs();
        records.push(IterationRecord {
            k,
            phase: Phase::Convex,
            objective: obj_new,
            x: x_new.clone(),
            alpha: alpha_new.clone(),
            delta: Some(delta),
        });
        tracker.offer(
            inst,
            tol,
            Incumbent {
                objective: obj_new,
                x: x_new.clone(),
                alpha: alpha_new.clone(),
                beta: Some(beta_new),
                s: s_new,
                feasible: false,
            },
        );
        x = x_new;
        alpha = alpha_new;
        objective = obj_new;
        if delta < tol.delta1 {
            termination = Termination::Converged;
            break;
        }
    }
    Ok(ScaLoop {
        records,
        tracker,
        termination,
        x,
        alpha,
    })
}

/// Convex loop relaxing every scenario, starting from `α = 1`.
pub fn algorithm2(inst: &CcpInstance, x0: &[f64], tol: &Tolerances) -> Result<IterationTrace> {
    let run = sca_loop(inst, x0, tol, false)?;
    let clipped = run
        .records
        .iter()
        .any(|r| r.alpha.iter().any(|&a| a >= tol.alpha_max));
    Ok(IterationTrace {
        records: run.records,
        incumbent: run.tracker.finish(),
        termination: run.termination,
        post_step_objective: None,
        alpha_clipped: clipped,
    })
}

/// Convex loop over the strictly satisfied scenarios, then a fixed-`α` LP
/// re-solve, then the scaling heuristic from that point.
pub fn algorithm3_hybrid(
    inst: &CcpInstance,
    x0: &[f64],
    tol: &Tolerances,
) -> Result<IterationTrace> {
    let run = sca_loop(inst, x0, tol, true)?;
    let mut records = run.records;
    let mut tracker = run.tracker;
    let mut termination = run.termination;
    let mut post_step_objective = None;
    let mut seed = (run.x.clone(), run.alpha.clone());

    let post = solve_scaled_cvar_budget(inst, &run.alpha, None, tol)
        .ok()
        .filter(|s| s.is_optimal());
    if let Some(sol) = post.as_ref() {
        post_step_objective = Some(sol.objective);
        let prev = records.last().map_or(sol.objective, |r| r.objective);
        records.push(IterationRecord {
            k: records.len(),
            phase: Phase::PostStep,
            objective: sol.objective,
            x: sol.x.clone(),
            alpha: run.alpha.clone(),
            delta: Some((prev - sol.objective).abs()),
        });
        tracker.offer(
            inst,
            tol,
            Incumbent {
                objective: sol.objective,
                x: sol.x.clone(),
                alpha: run.alpha.clone(),
                beta: Some(sol.beta),
                s: sol.s.clone(),
                feasible: false,
            },
        );
        seed = (sol.x.clone(), run.alpha.clone());
    }

    let opts = Algorithm1Options {
        initial_alpha: Some(seed.1),
        ..Default::default()
    };
    if let Ok(heur) = algorithm1(inst, &seed.0, tol, &opts) {
        let offset = records.len();
        for (idx, rec) in heur.records.into_iter().enumerate().skip(1) {
            records.push(IterationRecord {
                k: offset + idx - 1,
                ..rec
            });
        }
        tracker.offer(inst, tol, heur.incumbent);
        termination = heur.termination;
    }
    let clipped = records
        .iter()
        .any(|r| r.alpha.iter().any(|&a| a >= tol.alpha_max));
    Ok(IterationTrace {
        records,
        incumbent: tracker.finish(),
        termination,
        post_step_objective,
        alpha_clipped: clipped,
    })
}
