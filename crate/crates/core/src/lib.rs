//! Decoherence-free subsystems of linear open quantum systems.
//!
//! A system is given by its quadratic Hamiltonian matrix `G` and linear
//! coupling vectors `c_i` ([`system::QuantumLinearSystem`]). From that data
//! the crate
//!
//! - finds the decoherence-free (DF) subspace and builds a symplectic
//!   orthogonal transform separating DF and dissipative modes ([`df`]),
//! - propagates Gaussian means and covariances, solves Lyapunov equations and
//!   certifies that DF/dissipative correlations decay ([`gaussian`]),
//! - builds the worked physical examples and solves their engineering
//!   conditions ([`scenarios`]).

pub mod df;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod scenarios;
pub mod system;

pub use df::{
    complement_basis, decompose, df_hamiltonian, df_subspace, hamiltonian_preserves_df,
    kalman_matrices, kernel_basis, symplectic_df_basis, DfDecomposition, KalmanMatrices,
    KernelBasis, Preservation, PreservationCheck, PreservationTest, DEFAULT_TOL_RANK,
};
pub use error::{DflsError, Result};
pub use gaussian::{
    correlation_block_norm, decoupling_stability, evolve_moments, evolve_moments_with,
    log_negativity_two_mode, purity, steady_covariance, symplectic_eigenvalues,
    uncertainty_min_eigenvalue, EvolveOptions, GaussianMoments, Propagator, StabilityReport,
    StateMetrics, DEFAULT_TOL_MARGIN, DEFAULT_TOL_PSD,
};
pub use scenarios::Scenario;
pub use system::{
    basis_permutation, is_symplectic, symplectic_form, system_matrices, ModeBasisPermutation,
    QuantumLinearSystem, SymplecticStructure, SystemMatrices,
};
