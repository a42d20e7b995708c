use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scvar_core::Tolerances;

#[derive(Debug, Parser)]
#[command(
    name = "scvar",
    version,
    about = "Scenario-wise scaled CVaR for chance-constrained programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instance file and print its shape.
    Validate { instance: PathBuf },
    /// Solve an instance with one method and write a solution document.
    Solve(SolveArgs),
    /// Find a point of X with every scenario row at most delta_bar.
    Certify {
        instance: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Scaled CVaR objective while one scenario's factor runs over a grid.
    Sweep(SweepArgs),
    /// Write a random instance.
    Generate(GenerateArgs),
    /// Run methods over generated (or given) instances and write CSV.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cvar,
    Scaled,
    Alg1,
    Alg2,
    Alg3,
    Alsox,
    #[value(name = "alsox-scaled")]
    AlsoxScaled,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Cvar,
    Alsox,
}

/// Every default here equals the library default.
#[derive(Debug, Clone, Args)]
pub struct TolArgs {
    #[arg(long, default_value_t = 1e-6)]
    pub feas_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub opt_tol: f64,
    /// Stop when the objective moves by less than this.
    #[arg(long, default_value_t = 1e-4)]
    pub delta1: f64,
    /// Scenarios with g below this count as satisfied in the α update.
    #[arg(long, default_value_t = -0.005, allow_hyphen_values = true)]
    pub delta2: f64,
    /// Row level for `certify`.
    #[arg(long, default_value_t = -1e-5, allow_hyphen_values = true)]
    pub delta_bar: f64,
    #[arg(long, default_value_t = 1e6)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 25)]
    pub max_iter: usize,
    /// Bisection stops when t_U - t_L is at most this.
    #[arg(long, default_value_t = 0.05)]
    pub delta_a: f64,
}

impl TolArgs {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            feas_tol: self.feas_tol,
            opt_tol: self.opt_tol,
            delta1: self.delta1,
            delta2: self.delta2,
            delta_bar: self.delta_bar,
            alpha_max: self.alpha_max,
            max_iter: self.max_iter,
            delta_a: self.delta_a,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(short, long, value_enum)]
    pub method: MethodArg,
    /// Factors for `scaled`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Start point for alg1/alg2/alg3: a JSON array or a solution document.
    #[arg(long, conflicts_with = "init")]
    pub init_file: Option<PathBuf>,
    /// Start point source for alg1/alg2/alg3; `alsox` is used only when CVaR is infeasible.
    #[arg(long, value_enum, default_value = "cvar")]
    pub init: InitArg,
    /// alg1 only: pin factors that cannot pay off below the incumbent, then re-solve.
    #[arg(long)]
    pub prune_eta: bool,
    /// Bisection bounds; t_U defaults to the CVaR value, then to max cᵀx over X.
    #[arg(long, allow_hyphen_values = true)]
    pub t_lower: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t_upper: Option<f64>,
    #[arg(long, default_value_t = scvar_core::exact::DEFAULT_MAX_SCENARIOS)]
    pub max_scenarios: usize,
    /// Include the iteration trace or bisection log.
    #[arg(long)]
    pub trace: bool,
    #[command(flatten)]
    pub tol: TolArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub instance: PathBuf,
    /// 0-based scenario whose factor varies.
    #[arg(long)]
    pub scenario: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<f64>,
    /// Factors of the other scenarios (all ones when absent).
    #[arg(long, value_delimiter = ',')]
    pub base: Vec<f64>,
    #[command(flatten)]
    pub tol: TolArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value = "portfolio")]
    pub family: String,
    #[arg(short, long)]
    pub n: usize,
    /// Number of scenarios.
    #[arg(long = "scenarios", short = 'N')]
    pub num_scenarios: usize,
    /// Rows per scenario (covering only).
    #[arg(long, default_value_t = 1)]
    pub rows: usize,
    #[arg(long, default_value_t = 0.050333)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Instance files; when absent, instances are generated from the flags below.
    pub instances: Vec<PathBuf>,
    #[arg(long, default_value = "portfolio")]
    pub family: String,
    #[arg(short, long, default_value_t = 20)]
    pub n: usize,
    #[arg(long = "scenarios", short = 'N', default_value_t = 200)]
    pub num_scenarios: usize,
    #[arg(long, default_value_t = 1)]
    pub rows: usize,
    #[arg(long, value_delimiter = ',', default_values_t = scvar_core::bench::DEFAULT_EPSILONS)]
    pub eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0u64])]
    pub seeds: Vec<u64>,
    #[arg(long, value_delimiter = ',', default_values_t = ["cvar".to_string(), "alg1".to_string()])]
    pub methods: Vec<String>,
    /// Worker threads (0 = rayon default).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub tol: TolArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}
