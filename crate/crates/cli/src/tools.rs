use std::fmt::Write as _;
use std::path::Path;

use scvar_core::bench::{generate, run_experiment, write_csv, Family, GeneratorConfig, Method};
use scvar_core::cvar::solve_scaled_cvar;
use scvar_core::io::{instance_to_json, read_instance};
use scvar_core::{CcpInstance, EpsilonRegularity, ScalingVector, Tolerances};

use crate::args::{BenchArgs, GenerateArgs, SweepArgs, TolArgs};
use crate::emit;
use crate::failure::{Failure, Outcome};

pub fn validate(path: &Path) -> Outcome {
    let inst = read_instance(path)?;
    let regular = match inst.epsilon_regularity_check() {
        EpsilonRegularity::Pass => "yes".to_string(),
        other => format!("no ({other:?})"),
    };
    println!(
        "{}: n = {}, N = {}, J = {}, epsilon = {}, epsilon-regular: {regular}",
        path.display(),
        inst.n(),
        inst.num_scenarios(),
        inst.rows_per_scenario(),
        inst.epsilon
    );
    Ok(())
}

pub fn certify(path: &Path, tol: &TolArgs, output: Option<&Path>) -> Outcome {
    let tol = tol.tolerances();
    tol.validate()?;
    let inst = read_instance(path)?;
    match inst.certificate_point(tol.delta_bar, &tol)? {
        Some(x) => {
            let doc = serde_json::json!({ "delta_bar": tol.delta_bar, "x": x });
            emit(output, &serde_json::to_string_pretty(&doc)?)?;
            Ok(())
        }
        None => Err(Failure::Infeasible(format!(
            "no point of X has every row at most {}",
            tol.delta_bar
        ))),
    }
}

/// One `(α, objective)` row per grid value; the objective is empty when the
/// scaled LP is infeasible.
pub fn sweep_rows(
    inst: &CcpInstance,
    scenario: usize,
    grid: &[f64],
    base: &[f64],
    tol: &Tolerances,
) -> Result<Vec<(f64, Option<f64>)>, Failure> {
    let big_n = inst.num_scenarios();
    if scenario >= big_n {
        return Err(scvar_core::Error::IndexOutOfRange {
            index: scenario,
            len: big_n,
        }
        .into());
    }
    let mut alpha = if base.is_empty() {
        vec![1.0; big_n]
    } else if base.len() == big_n {
        base.to_vec()
    } else {
        return Err(Failure::input(format!(
            "--base needs {big_n} factors, got {}",
            base.len()
        )));
    };
    grid.iter()
        .map(|&a| {
            alpha[scenario] = a;
            let sv = ScalingVector::new(alpha.clone(), tol.alpha_max)?;
            let sol = solve_scaled_cvar(inst, &sv, tol)?;
            Ok((a, sol.is_optimal().then_some(sol.objective)))
        })
        .collect()
}

pub fn sweep(args: &SweepArgs) -> Outcome {
    let tol = args.tol.tolerances();
    tol.validate()?;
    let inst = read_instance(&args.instance)?;
    let rows = sweep_rows(&inst, args.scenario, &args.grid, &args.base, &tol)?;
    let mut text = String::from("alpha,objective\n");
    for (a, v) in rows {
        let v = v.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(text, "{a},{v}");
    }
    emit(args.output.as_deref(), text.trim_end())
}

fn config(
    family: &str,
    n: usize,
    big_n: usize,
    rows: usize,
    eps: f64,
    seed: u64,
) -> Result<GeneratorConfig, Failure> {
    let cfg = match family.parse::<Family>()? {
        Family::Portfolio if rows != 1 => {
            return Err(Failure::input(
                "portfolio instances have one row per scenario",
            ))
        }
        Family::Portfolio => GeneratorConfig::portfolio(n, big_n, eps, seed),
        Family::Covering => GeneratorConfig::covering(n, big_n, rows, eps, seed),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn generate_cmd(args: &GenerateArgs) -> Outcome {
    let cfg = config(
        &args.family,
        args.n,
        args.num_scenarios,
        args.rows,
        args.eps,
        args.seed,
    )?;
    let inst = generate(&cfg)?;
    emit(args.output.as_deref(), &instance_to_json(&inst)?)
}

pub fn bench(args: &BenchArgs) -> Outcome {
    let tol = args.tol.tolerances();
    tol.validate()?;
    let methods = args
        .methods
        .iter()
        .map(|m| m.parse::<Method>())
        .collect::<Result<Vec<_>, _>>()?;
    let instances = if args.instances.is_empty() {
        let mut out = Vec::new();
        for &eps in &args.eps {
            for &seed in &args.seeds {
                let cfg = config(
                    &args.family,
                    args.n,
                    args.num_scenarios,
                    args.rows,
                    eps,
                    seed,
                )?;
                out.push(generate(&cfg)?);
            }
        }
        out
    } else {
        args.instances
            .iter()
            .map(read_instance)
            .collect::<Result<Vec<_>, _>>()?
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure::input(e.to_string()))?;
    let rows = pool.install(|| run_experiment(&instances, &methods, &tol));
    for r in rows.iter().filter_map(|r| r.error.as_ref().map(|e| (r, e))) {
        eprintln!("{} / {}: {}", r.0.instance, r.0.method, r.1);
    }
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    emit(
        args.output.as_deref(),
        String::from_utf8_lossy(&buf).trim_end(),
    )
}
