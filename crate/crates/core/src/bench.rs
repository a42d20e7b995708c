//! Random instance families, the improvement metric, and experiment runs.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alsox::{alsox_sharp, scaled_alsox_sharp};
use crate::cvar::solve_cvar;
use crate::error::{Error, Result};
use crate::exact::{brute_force_optimal, DEFAULT_MAX_SCENARIOS};
use crate::model::{CcpInstance, Domain, Scenario, Tolerances};
use crate::sca::{algorithm2, algorithm3_hybrid};
use crate::scaling::{algorithm1, Algorithm1Options};

pub const DEFAULT_EPSILONS: [f64; 4] = [0.050333, 0.100333, 0.200333, 0.300333];

pub const CSV_HEADER: [&str; 8] = [
    "instance",
    "eps",
    "method",
    "value",
    "time_s",
    "improvement_pct",
    "feasible",
    "violation_prob",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Portfolio,
    Covering,
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "portfolio" => Ok(Self::Portfolio),
            "covering" => Ok(Self::Covering),
            other => Err(Error::ConfigError(format!("unknown family {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub family: Family,
    pub n: usize,
    pub num_scenarios: usize,
    /// Rows per scenario; portfolio instances always have one.
    pub rows: usize,
    pub epsilon: f64,
    pub seed: u64,
    /// Portfolio: `Σx ≤ budget_fraction · n`.
    pub budget_fraction: f64,
    /// Portfolio: range of `ξ`. Covering: range of `A` entries.
    pub coef_range: (f64, f64),
    /// Portfolio: integer costs drawn from the rounded range. Covering: uniform.
    pub cost_range: (f64, f64),
    /// Covering: `b_j = u · Σ_k A_jk` with `u` uniform in this range.
    pub demand_range: (f64, f64),
}

impl GeneratorConfig {
    pub fn portfolio(n: usize, num_scenarios: usize, epsilon: f64, seed: u64) -> Self {
        Self {
            family: Family::Portfolio,
            n,
            num_scenarios,
            rows: 1,
            epsilon,
            seed,
            budget_fraction: 0.2,
            coef_range: (0.8, 1.2),
            cost_range: (1.0, 100.0),
            demand_range: (0.0, 0.0),
        }
    }

    pub fn covering(n: usize, num_scenarios: usize, rows: usize, epsilon: f64, seed: u64) -> Self {
        Self {
            family: Family::Covering,
            n,
            num_scenarios,
            rows,
            epsilon,
            seed,
            budget_fraction: 0.0,
            coef_range: (0.0, 1.0),
            cost_range: (0.1, 1.0),
            demand_range: (0.2, 0.6),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.num_scenarios == 0 || self.rows == 0 {
            return Err(Error::ConfigError("n, N and J must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::RiskLevelError(self.epsilon));
        }
        for (name, (lo, hi)) in [
            ("coef_range", self.coef_range),
            ("cost_range", self.cost_range),
            ("demand_range", self.demand_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::ConfigError(format!(
                    "{name} = ({lo}, {hi}) is not an interval"
                )));
            }
        }
        match self.family {
            Family::Portfolio => {
                if self.rows != 1 {
                    return Err(Error::ConfigError("portfolio instances have J = 1".into()));
                }
                if self.budget_fraction <= 0.0 {
                    return Err(Error::ConfigError(
                        "budget_fraction must be positive".into(),
                    ));
                }
            }
            Family::Covering => {
                if self.coef_range.0 < 0.0 {
                    return Err(Error::ConfigError(
                        "covering coefficients must be nonnegative".into(),
                    ));
                }
                if self.demand_range.0 <= 0.0 {
                    return Err(Error::ConfigError(
                        "covering demands must be positive".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

pub fn gen_portfolio(cfg: &GeneratorConfig) -> Result<CcpInstance> {
    if cfg.family != Family::Portfolio {
        return Err(Error::ConfigError("expected a portfolio config".into()));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (clo, chi) = (
        cfg.cost_range.0.round() as i64,
        cfg.cost_range.1.round() as i64,
    );
    let cost = (0..cfg.n)
        .map(|_| rng.random_range(clo..=chi) as f64)
        .collect();
    let p = 1.0 / cfg.num_scenarios as f64;
    let scenarios = (0..cfg.num_scenarios)
        .map(|_| Scenario {
            w: vec![(0..cfg.n)
                .map(|_| -uniform(&mut rng, cfg.coef_range))
                .collect()],
            d: vec![1.0],
            p,
        })
        .collect();
    let mut domain = Domain::unit_box(cfg.n);
    domain.p_rows.push(vec![1.0; cfg.n]);
    domain.q.push(cfg.budget_fraction * cfg.n as f64);
    let inst = CcpInstance {
        name: format!("portfolio-n{}-N{}-s{}", cfg.n, cfg.num_scenarios, cfg.seed),
        cost,
        scenarios,
        epsilon: cfg.epsilon,
        domain,
    };
    inst.validate()?;
    Ok(inst)
}

pub fn gen_covering(cfg: &GeneratorConfig) -> Result<CcpInstance> {
    if cfg.family != Family::Covering {
        return Err(Error::ConfigError("expected a covering config".into()));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cost = (0..cfg.n)
        .map(|_| uniform(&mut rng, cfg.cost_range))
        .collect();
    let p = 1.0 / cfg.num_scenarios as f64;
    let scenarios = (0..cfg.num_scenarios)
        .map(|_| {
            let mut w = Vec::with_capacity(cfg.rows);
            let mut d = Vec::with_capacity(cfg.rows);
            for _ in 0..cfg.rows {
                let a: Vec<f64> = (0..cfg.n)
                    .map(|_| uniform(&mut rng, cfg.coef_range))
                    .collect();
                let total: f64 = a.iter().sum();
                // Keep b > 0 even when every drawn coefficient is zero.
                let b = (uniform(&mut rng, cfg.demand_range) * total).max(1e-3);
                w.push(a.iter().map(|v| -v).collect());
                d.push(b);
            }
            Scenario { w, d, p }
        })
        .collect();
    let inst = CcpInstance {
        name: format!(
            "covering-n{}-N{}-J{}-s{}",
            cfg.n, cfg.num_scenarios, cfg.rows, cfg.seed
        ),
        cost,
        scenarios,
        epsilon: cfg.epsilon,
        domain: Domain::unit_box(cfg.n),
    };
    inst.validate()?;
    Ok(inst)
}

pub fn generate(cfg: &GeneratorConfig) -> Result<CcpInstance> {
    match cfg.family {
        Family::Portfolio => gen_portfolio(cfg),
        Family::Covering => gen_covering(cfg),
    }
}

/// Percentage by which `v_method` improves on the CVaR value.
pub fn improvement(v_cvar: f64, v_method: f64) -> Result<f64> {
    if !v_cvar.is_finite() || v_cvar.abs() <= 1e-12 {
        return Err(Error::DegenerateBaseline(v_cvar));
    }
    Ok((v_cvar - v_method) / v_cvar.abs() * 100.0)
}

/// Methods that `run_experiment` can run without extra input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Cvar,
    Alg1,
    Alg2,
    Alg3,
    Alsox,
    AlsoxScaled,
    Exact,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Cvar,
        Method::Alg1,
        Method::Alg2,
        Method::Alg3,
        Method::Alsox,
        Method::AlsoxScaled,
        Method::Exact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cvar => "cvar",
            Method::Alg1 => "alg1",
            Method::Alg2 => "alg2",
            Method::Alg3 => "alg3",
            Method::Alsox => "alsox",
            Method::AlsoxScaled => "alsox-scaled",
            Method::Exact => "exact",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::ConfigError(format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub eps: f64,
    pub method: Method,
    /// Absent when the method failed.
    pub value: Option<f64>,
    pub time_s: f64,
    pub improvement_pct: Option<f64>,
    pub feasible: bool,
    pub violation_prob: Option<f64>,
    /// Why the method produced no point.
    pub error: Option<String>,
}

/// Runs one method and returns its point. `x_cvar` and `v_cvar` come from the
/// baseline solve.
fn run_method(
    inst: &CcpInstance,
    method: Method,
    x_cvar: Option<&[f64]>,
    v_cvar: Option<f64>,
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let start = || x_cvar.map(<[f64]>::to_vec).ok_or(Error::Infeasible);
    match method {
        Method::Cvar => start(),
        Method::Alg1 => Ok(
            algorithm1(inst, &start()?, tol, &Algorithm1Options::default())?
                .incumbent
                .x,
        ),
        Method::Alg2 => Ok(algorithm2(inst, &start()?, tol)?.incumbent.x),
        Method::Alg3 => Ok(algorithm3_hybrid(inst, &start()?, tol)?.incumbent.x),
        Method::Alsox => Ok(alsox_sharp(inst, None, v_cvar.ok_or(Error::Infeasible)?, tol)?.x),
        Method::AlsoxScaled => {
            Ok(scaled_alsox_sharp(inst, None, v_cvar.ok_or(Error::Infeasible)?, tol)?.x)
        }
        Method::Exact => Ok(brute_force_optimal(inst, DEFAULT_MAX_SCENARIOS, tol)?.x_star),
    }
}

fn row_for(
    inst: &CcpInstance,
    method: Method,
    outcome: Result<Vec<f64>>,
    time_s: f64,
    v_cvar: Option<f64>,
    tol: &Tolerances,
) -> BenchRow {
    let mut row = BenchRow {
        instance: inst.name.clone(),
        eps: inst.epsilon,
        method,
        value: None,
        time_s,
        improvement_pct: None,
        feasible: false,
        violation_prob: None,
        error: None,
    };
    match outcome {
        Ok(x) => {
            let v = inst.objective(&x);
            row.value = Some(v);
            row.improvement_pct = v_cvar.and_then(|b| improvement(b, v).ok());
            row.violation_prob = inst.violation_probability(&x, tol.feas_tol).ok();
            row.feasible = inst.chance_feasible(&x, tol.feas_tol).unwrap_or(false);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn run_instance(inst: &CcpInstance, methods: &[Method], tol: &Tolerances) -> Vec<BenchRow> {
    let clock = Instant::now();
    let baseline = solve_cvar(inst, tol);
    let base_time = clock.elapsed().as_secs_f64();
    let (x_cvar, v_cvar) = match &baseline {
        Ok(sol) if sol.is_optimal() => (Some(sol.x.clone()), Some(sol.objective)),
        _ => (None, None),
    };
    let mut rows = Vec::with_capacity(methods.len());
    for &m in methods {
        let (outcome, secs) = if m == Method::Cvar {
            let outcome = match &baseline {
                Ok(_) => x_cvar.clone().ok_or(Error::Infeasible),
                Err(e) => Err(Error::ConfigError(e.to_string())),
            };
            (outcome, base_time)
        } else {
            let clock = Instant::now();
            let outcome = run_method(inst, m, x_cvar.as_deref(), v_cvar, tol);
            (outcome, clock.elapsed().as_secs_f64())
        };
        rows.push(row_for(inst, m, outcome, secs, v_cvar, tol));
    }
    rows
}

/// Runs every method on every instance. CVaR is solved first on each instance
/// as the baseline and the start point. Rows are ordered by instance, then by
/// the order of `methods`. Instances run in parallel on the current rayon pool.
pub fn run_experiment(
    instances: &[CcpInstance],
    methods: &[Method],
    tol: &Tolerances,
) -> Vec<BenchRow> {
    instances
        .par_iter()
        .map(|inst| run_instance(inst, methods, tol))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.eps.to_string(),
            r.method.to_string(),
            opt(r.value),
            format!("{:.6}", r.time_s),
            opt(r.improvement_pct),
            r.feasible.to_string(),
            opt(r.violation_prob),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::io::instance_to_json;

    #[test]
    fn improvement_metric() {
        assert!((improvement(-5778.50, -5851.09).unwrap() - 1.2562).abs() < 1e-3);
        assert!((improvement(2.86, 2.79).unwrap() - 2.4476).abs() < 1e-3);
        assert_eq!(improvement(3.0, 3.0).unwrap(), 0.0);
        assert!(matches!(
            improvement(0.0, 1.0),
            Err(Error::DegenerateBaseline(_))
        ));
    }

    #[test]
    fn portfolio_generator() {
        let cfg = GeneratorConfig::portfolio(50, 500, 0.05, 1231);
        let inst = gen_portfolio(&cfg).unwrap();
        assert_eq!(inst.num_scenarios(), 500);
        for sc in &inst.scenarios {
            assert!(sc.w[0].iter().all(|&w| (-1.2..=-0.8).contains(&w)));
            assert_eq!(sc.d, vec![1.0]);
        }
        assert!(inst
            .cost
            .iter()
            .all(|&c| c.fract() == 0.0 && (1.0..=100.0).contains(&c)));
        assert_eq!(inst.domain.q, vec![10.0]);
        let again = gen_portfolio(&cfg).unwrap();
        assert_eq!(
            instance_to_json(&inst).unwrap(),
            instance_to_json(&again).unwrap()
        );
        let other = gen_portfolio(&GeneratorConfig { seed: 1232, ..cfg }).unwrap();
        assert_ne!(inst, other);
    }

    #[test]
    fn portfolio_certificates() {
        let tol = Tolerances::default();
        for seed in 0..5 {
            let inst = gen_portfolio(&GeneratorConfig::portfolio(10, 30, 0.1, seed)).unwrap();
            assert!(inst
                .certificate_point(tol.delta_bar, &tol)
                .unwrap()
                .is_some());
        }
    }

    #[test]
    fn covering_generator() {
        let inst = gen_covering(&GeneratorConfig::covering(20, 100, 10, 0.1, 3)).unwrap();
        assert_eq!(inst.rows_per_scenario(), 10);
        for sc in &inst.scenarios {
            assert!(sc.w.iter().flatten().all(|&w| w <= 0.0));
            assert!(sc.d.iter().all(|&d| d > 0.0));
        }
        let norm = inst.normalize_covering_rows().unwrap();
        assert!(norm.scenarios.iter().all(|s| s.d.iter().all(|&d| d == 1.0)));
    }

    #[test]
    fn bad_configs() {
        let mut cfg = GeneratorConfig::portfolio(5, 10, 0.1, 0);
        cfg.rows = 2;
        assert!(matches!(gen_portfolio(&cfg), Err(Error::ConfigError(_))));
        let cfg = GeneratorConfig::covering(0, 10, 1, 0.1, 0);
        assert!(matches!(gen_covering(&cfg), Err(Error::ConfigError(_))));
        assert!(matches!(
            gen_covering(&GeneratorConfig::portfolio(5, 10, 0.1, 0)),
            Err(Error::ConfigError(_))
        ));
        assert!("knapsack".parse::<Family>().is_err());
        assert_eq!(
            "alsox-scaled".parse::<Method>().unwrap(),
            Method::AlsoxScaled
        );
    }

    #[test]
    fn experiment_rows() {
        let tol = Tolerances::default();
        let rows = run_experiment(&[fixtures::example2()], &[Method::Cvar], &tol);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].improvement_pct, Some(0.0));

        let rows = run_experiment(
            &[fixtures::example2(), fixtures::example6()],
            &[Method::Cvar, Method::Alg1, Method::Exact],
            &tol,
        );
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].instance, "example2");
        assert_eq!(rows[3].method, Method::Cvar);
        for r in &rows {
            assert!(r.feasible, "{r:?}");
            assert!(r.improvement_pct.unwrap() >= -1e-6);
        }
        // Example 3 has no CVaR point: the sweep carries on with error rows.
        let rows = run_experiment(&[fixtures::example3()], &[Method::Cvar, Method::Alg1], &tol);
        assert!(rows.iter().all(|r| r.value.is_none() && r.error.is_some()));
    }

    #[test]
    fn portfolio_methods_are_feasible() {
        let tol = Tolerances::default();
        let insts: Vec<_> = (0..5)
            .map(|s| gen_portfolio(&GeneratorConfig::portfolio(8, 20, 0.100333, s)).unwrap())
            .collect();
        let rows = run_experiment(&insts, &[Method::Cvar, Method::Alsox, Method::Alg1], &tol);
        assert_eq!(rows.len(), 15);
        assert!(rows.iter().all(|r| r.feasible), "{rows:?}");
    }

    #[test]
    fn csv_layout() {
        let tol = Tolerances::default();
        let rows = run_experiment(&[fixtures::example2()], &[Method::Cvar, Method::Alg2], &tol);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER.join(","));
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("example2,"));
        assert_eq!(lines[1].split(',').count(), 8);
    }
}
