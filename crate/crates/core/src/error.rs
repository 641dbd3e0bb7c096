use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DflsError {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid hamiltonian: {0}")]
    InvalidHamiltonian(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A numerical rank decision produced an impossible (odd) subspace dimension.
    #[error("ill-conditioned rank decision: {0}; adjust tol_rank")]
    IllConditionedRank(String),

    #[error("subspace is not invariant under the symplectic form (residual {residual:.3e})")]
    InvarianceViolation { residual: f64 },

    #[error("decomposition inconsistency: {what} residual {residual:.3e} exceeds {bound:.3e}")]
    DecompositionInconsistency {
        what: &'static str,
        residual: f64,
        bound: f64,
    },

    #[error("covariance violates the uncertainty relation (min eigenvalue {min_eigenvalue:.3e})")]
    UncertaintyViolation { min_eigenvalue: f64 },

    #[error("unphysical state: det(2V) = {det:.6e} < 1")]
    UnphysicalState { det: f64 },

    #[error("drift matrix is not Hurwitz (spectral abscissa {abscissa:.3e}); no steady state")]
    NoSteadyState { abscissa: f64 },

    #[error("engineering infeasible: {0}")]
    EngineeringInfeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, DflsError>;
