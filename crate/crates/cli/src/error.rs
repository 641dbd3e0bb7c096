use dfls::DflsError;
use thiserror::Error;

/// Failures of a CLI run, each tied to a fixed process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("no DF subsystem")]
    NoDfSubsystem,

    #[error("{0}; adjust --tol-rank")]
    IllConditioned(String),

    #[error("unphysical state: {0}")]
    Unphysical(String),

    #[error("engineering infeasible: {0}")]
    Infeasible(String),

    #[error("reproduction failed: {0}")]
    ReproductionFailed(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ReproductionFailed(_) => 1,
            CliError::Parse(_) | CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::NoDfSubsystem => 3,
            CliError::IllConditioned(_) => 4,
            CliError::Unphysical(_) => 5,
            CliError::Infeasible(_) => 6,
        }
    }
}

impl From<DflsError> for CliError {
    fn from(err: DflsError) -> Self {
        let msg = err.to_string();
        match err {
            DflsError::InvalidDimension(_)
            | DflsError::InvalidHamiltonian(_)
            | DflsError::InvalidParameter(_) => CliError::Validation(msg),
            DflsError::UncertaintyViolation { .. } | DflsError::UnphysicalState { .. } => {
                CliError::Unphysical(msg)
            }
            DflsError::EngineeringInfeasible(_) => CliError::Infeasible(msg),
            DflsError::IllConditionedRank(_)
            | DflsError::InvarianceViolation { .. }
            | DflsError::DecompositionInconsistency { .. }
            | DflsError::NoSteadyState { .. }
            | DflsError::Numerical(_) => CliError::IllConditioned(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}
