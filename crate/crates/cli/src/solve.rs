use std::path::Path;

use scvar_core::alsox::{alsox_sharp, cost_lower_bound, scaled_alsox_sharp, BisectionReport};
use scvar_core::cvar::{solve_cvar, solve_scaled_cvar, CvarSolution};
use scvar_core::exact::brute_force_optimal;
use scvar_core::io::{read_instance, SolutionDocument};
use scvar_core::sca::{algorithm2, algorithm3_hybrid};
use scvar_core::scaling::{
    algorithm1, eta_bounds, prune_alpha_mask, Algorithm1Options, IterationTrace,
};
use scvar_core::{CcpInstance, ScalingVector, Tolerances};

use crate::args::{InitArg, MethodArg, SolveArgs};
use crate::emit;
use crate::failure::{Failure, Outcome};

pub fn run(args: &SolveArgs) -> Outcome {
    let tol = args.tol.tolerances();
    tol.validate()?;
    let inst = read_instance(&args.instance)?;
    let doc = solve(&inst, args, &tol)?;
    let text = serde_json::to_string_pretty(&doc)?;
    emit(args.output.as_deref(), &text)?;
    match doc.status.as_str() {
        "optimal" | "feasible" => Ok(()),
        other => Err(Failure::Infeasible(format!("status {other}"))),
    }
}

fn solve(
    inst: &CcpInstance,
    args: &SolveArgs,
    tol: &Tolerances,
) -> Result<SolutionDocument, Failure> {
    if args.prune_eta && args.method != MethodArg::Alg1 {
        return Err(Failure::input("--prune-eta applies to alg1 only"));
    }
    match args.method {
        MethodArg::Cvar => Ok(lp_document(inst, solve_cvar(inst, tol)?, tol)),
        MethodArg::Scaled => {
            if args.alpha.len() != inst.num_scenarios() {
                return Err(Failure::input(format!(
                    "--alpha needs {} factors, got {}",
                    inst.num_scenarios(),
                    args.alpha.len()
                )));
            }
            let alpha = ScalingVector::new(args.alpha.clone(), tol.alpha_max)?;
            Ok(lp_document(
                inst,
                solve_scaled_cvar(inst, &alpha, tol)?,
                tol,
            ))
        }
        MethodArg::Alg1 | MethodArg::Alg2 | MethodArg::Alg3 => {
            let x0 = start_point(inst, args, tol)?;
            let trace = match args.method {
                MethodArg::Alg1 => heuristic(inst, &x0, args.prune_eta, tol)?,
                MethodArg::Alg2 => algorithm2(inst, &x0, tol)?,
                _ => algorithm3_hybrid(inst, &x0, tol)?,
            };
            trace_document(inst, trace, args.trace, tol)
        }
        MethodArg::Alsox | MethodArg::AlsoxScaled => {
            let t_upper = match args.t_upper {
                Some(t) => t,
                None => default_t_upper(inst, tol)?,
            };
            let report = if args.method == MethodArg::Alsox {
                alsox_sharp(inst, args.t_lower, t_upper, tol)?
            } else {
                scaled_alsox_sharp(inst, args.t_lower, t_upper, tol)?
            };
            bisection_document(inst, report, args.trace, tol)
        }
        MethodArg::Exact => {
            let r = brute_force_optimal(inst, args.max_scenarios, tol)?;
            let mut doc = point_document(inst, r.x_star, "optimal", tol)?;
            if args.trace {
                doc.trace = Some(serde_json::json!({
                    "satisfied_set": r.satisfied_set,
                    "subproblems_solved": r.subproblems_solved,
                }));
            }
            Ok(doc)
        }
    }
}

/// CVaR value when the CVaR LP is feasible, else `max cᵀx` over X.
fn default_t_upper(inst: &CcpInstance, tol: &Tolerances) -> Result<f64, Failure> {
    let cvar = solve_cvar(inst, tol)?;
    if cvar.is_optimal() {
        return Ok(cvar.objective);
    }
    let mut flipped = inst.clone();
    flipped.cost.iter_mut().for_each(|c| *c = -*c);
    match cost_lower_bound(&flipped, tol) {
        Ok(v) if v.is_finite() => Ok(-v),
        _ => Err(Failure::input(
            "CVaR is infeasible and cᵀx is unbounded on X; pass --t-upper",
        )),
    }
}

fn start_point(
    inst: &CcpInstance,
    args: &SolveArgs,
    tol: &Tolerances,
) -> Result<Vec<f64>, Failure> {
    if let Some(path) = &args.init_file {
        let x = read_point(path)?;
        inst.check_x(&x)?;
        return Ok(x);
    }
    let cvar = solve_cvar(inst, tol)?;
    if cvar.is_optimal() {
        return Ok(cvar.x);
    }
    match args.init {
        InitArg::Cvar => Err(Failure::Infeasible(
            "the CVaR start point does not exist; try --init alsox or --init-file".into(),
        )),
        InitArg::Alsox => {
            let t_upper = match args.t_upper {
                Some(t) => t,
                None => default_t_upper(inst, tol)?,
            };
            Ok(alsox_sharp(inst, args.t_lower, t_upper, tol)?.x)
        }
    }
}

/// A bare JSON array, or any object with an `x` array.
fn read_point(path: &Path) -> Result<Vec<f64>, Failure> {
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let arr = match &value {
        serde_json::Value::Array(_) => &value,
        serde_json::Value::Object(m) => m
            .get("x")
            .ok_or_else(|| Failure::input("init file has no \"x\" field"))?,
        _ => {
            return Err(Failure::input(
                "init file must hold an array or an object with \"x\"",
            ))
        }
    };
    Ok(serde_json::from_value(arr.clone())?)
}

fn heuristic(
    inst: &CcpInstance,
    x0: &[f64],
    prune: bool,
    tol: &Tolerances,
) -> Result<IterationTrace, Failure> {
    let first = algorithm1(inst, x0, tol, &Algorithm1Options::default())?;
    if !prune || !first.incumbent.feasible {
        return Ok(first);
    }
    let eta = eta_bounds(inst, tol)?;
    let mask = prune_alpha_mask(&eta, first.incumbent.objective, tol.feas_tol);
    let opts = Algorithm1Options {
        fixed_mask: Some(mask),
        ..Default::default()
    };
    let second = algorithm1(inst, x0, tol, &opts)?;
    let better =
        second.incumbent.feasible && second.incumbent.objective < first.incumbent.objective;
    Ok(if better { second } else { first })
}

fn violation(inst: &CcpInstance, x: &[f64], tol: &Tolerances) -> Result<Option<f64>, Failure> {
    Ok(Some(inst.violation_probability(x, tol.feas_tol)?))
}

fn lp_document(inst: &CcpInstance, sol: CvarSolution, tol: &Tolerances) -> SolutionDocument {
    if !sol.is_optimal() {
        return SolutionDocument {
            objective: None,
            x: Vec::new(),
            beta: None,
            s: Vec::new(),
            alpha: sol.alpha,
            status: "infeasible".into(),
            violation_prob: None,
            trace: None,
        };
    }
    SolutionDocument {
        objective: Some(sol.objective),
        violation_prob: inst.violation_probability(&sol.x, tol.feas_tol).ok(),
        x: sol.x,
        beta: Some(sol.beta),
        s: sol.s,
        alpha: sol.alpha,
        status: "optimal".into(),
        trace: None,
    }
}

fn point_document(
    inst: &CcpInstance,
    x: Vec<f64>,
    status: &str,
    tol: &Tolerances,
) -> Result<SolutionDocument, Failure> {
    Ok(SolutionDocument {
        objective: Some(inst.objective(&x)),
        violation_prob: violation(inst, &x, tol)?,
        x,
        beta: None,
        s: Vec::new(),
        alpha: Vec::new(),
        status: status.into(),
        trace: None,
    })
}

fn trace_document(
    inst: &CcpInstance,
    trace: IterationTrace,
    with_trace: bool,
    tol: &Tolerances,
) -> Result<SolutionDocument, Failure> {
    let inc = &trace.incumbent;
    let status = if inc.feasible {
        "feasible"
    } else {
        "no_feasible_incumbent"
    };
    let mut doc = point_document(inst, inc.x.clone(), status, tol)?;
    doc.beta = inc.beta;
    doc.s = inc.s.clone();
    doc.alpha = inc.alpha.clone();
    if with_trace {
        doc.trace = Some(serde_json::to_value(&trace)?);
    }
    Ok(doc)
}

fn bisection_document(
    inst: &CcpInstance,
    report: BisectionReport,
    with_trace: bool,
    tol: &Tolerances,
) -> Result<SolutionDocument, Failure> {
    let feasible = inst.chance_feasible(&report.x, tol.feas_tol)?;
    let status = if feasible {
        "feasible"
    } else {
        "no_feasible_incumbent"
    };
    let mut doc = point_document(inst, report.x.clone(), status, tol)?;
    if with_trace {
        doc.trace = Some(serde_json::to_value(&report)?);
    }
    Ok(doc)
}
