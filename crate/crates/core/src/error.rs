use scvar_conic::SolveStatus;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid probabilities: {0}")]
    ProbabilityError(String),
    #[error("risk level {0} is outside (0, 1)")]
    RiskLevelError(f64),
    #[error("scenario index {index} out of range for {len} scenarios")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("scaling factor alpha[{index}] = {value} is outside [1, {max}]")]
    ScalingOutOfRange { index: usize, value: f64, max: f64 },
    #[error("scenario {scenario} row {row} has offset {d} <= 0, not a covering row")]
    NotCovering { scenario: usize, row: usize, d: f64 },
    #[error("solver failed with status {0:?}")]
    SolverFailure(SolveStatus),
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("construction needs tau < epsilon, got tau = {tau}, epsilon = {epsilon}")]
    ConditionViolated { tau: f64, epsilon: f64 },
    #[error("{n} scenarios exceed the enumeration cap of {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("no chance-feasible incumbent at the initial upper bound")]
    NoFeasibleIncumbent,
    #[error("baseline value {0} is too close to zero for a relative improvement")]
    DegenerateBaseline(f64),
    #[error("invalid configuration: {0}")]
    ConfigError(String),
    #[error("cannot parse instance: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Maps a non-optimal solver status onto the crate error.
pub(crate) fn status_error(status: SolveStatus) -> Error {
    match status {
        SolveStatus::Infeasible => Error::Infeasible,
        SolveStatus::Unbounded => Error::Unbounded,
        other => Error::SolverFailure(other),
    }
}
