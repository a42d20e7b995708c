use std::fmt;
use std::process::ExitCode;

use scvar_core::Error;

/// Exit codes: 1 infeasible, 2 bad input, 3 solver trouble.
#[derive(Debug)]
pub enum Failure {
    Infeasible(String),
    Input(String),
    Solver(String),
}

impl Failure {
    pub fn code(&self) -> ExitCode {
        ExitCode::from(match self {
            Failure::Infeasible(_) => 1,
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
        })
    }

    pub fn input(msg: impl Into<String>) -> Self {
        Failure::Input(msg.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Infeasible(m) => write!(f, "infeasible: {m}"),
            Failure::Input(m) => write!(f, "input error: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Infeasible | Error::NoFeasibleIncumbent | Error::ConditionViolated { .. } => {
                Failure::Infeasible(msg)
            }
            Error::SolverFailure(_) | Error::Unbounded | Error::DegenerateBaseline(_) => {
                Failure::Solver(msg)
            }
            _ => Failure::Input(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

pub type Outcome = Result<(), Failure>;
