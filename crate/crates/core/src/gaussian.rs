//! Gaussian moment dynamics, Lyapunov equations and state metrics.
//!
//! Under linear dynamics a Gaussian state stays Gaussian, with
//! `d⟨x⟩/dt = A⟨x⟩` and `dV/dt = AV + VAᵀ + D`. Vacuum quadrature variances
//! are `1/2` in this convention.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{DflsError, Result};
use crate::linalg;
use crate::system::sigma;

/// Default tolerance on the uncertainty relation `V + iΣ/2 ⪰ 0`.
pub const DEFAULT_TOL_PSD: f64 = 1e-9;
/// Default margin for the decoupling stability test.
pub const DEFAULT_TOL_MARGIN: f64 = 1e-10;

/// Smallest eigenvalue of the Hermitian matrix `V + iΣ_n/2`.
pub fn uncertainty_min_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    let s = sigma(cov.nrows() / 2) * 0.5;
    linalg::hermitian_min_eigenvalue(&linalg::symmetrize(cov), &s)
}

/// Mean vector and covariance matrix of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMoments {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianMoments {
    /// Validates shape, symmetry and the uncertainty relation.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, tol_psd: f64) -> Result<Self> {
        let moments = Self::unchecked(mean, cov)?;
        let min = uncertainty_min_eigenvalue(&moments.cov);
        if min < -tol_psd {
            return Err(DflsError::UncertaintyViolation { min_eigenvalue: min });
        }
        Ok(moments)
    }

    /// Shape and symmetry checks only.
    pub fn unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) || cov.shape() != (dim, dim) {
            return Err(DflsError::InvalidDimension(format!(
                "mean of length {dim} with covariance {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let asym = linalg::max_abs(&(&cov - cov.transpose()));
        if asym > 1e-12 * linalg::max_abs(&cov).max(1.0) {
            return Err(DflsError::InvalidParameter(format!(
                "covariance asymmetry {asym:.3e}"
            )));
        }
        Ok(Self {
            mean,
            cov: linalg::symmetrize(&cov),
        })
    }

    pub fn vacuum(n: usize) -> Self {
        Self {
            mean: DVector::zeros(2 * n),
            cov: DMatrix::identity(2 * n, 2 * n) * 0.5,
        }
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn is_physical(&self, tol_psd: f64) -> bool {
        uncertainty_min_eigenvalue(&self.cov) >= -tol_psd
    }
}

/// How covariances are propagated in time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagator {
    /// Exponential of the Kronecker-lifted affine generator.
    Exact,
    /// Classical fixed-step fourth-order Runge-Kutta with at most `max_step`
    /// per step. Kept as an independent cross-check.
    Rk4 { max_step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub propagator: Propagator,
    pub tol_psd: f64,
    /// Skip the uncertainty check on the initial state.
    pub allow_unphysical: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            propagator: Propagator::Exact,
            tol_psd: DEFAULT_TOL_PSD,
            allow_unphysical: false,
        }
    }
}

/// Moments at each time of `t_grid` (which must start at 0 and increase).
pub fn evolve_moments(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    initial: &GaussianMoments,
    t_grid: &[f64],
) -> Result<Vec<GaussianMoments>> {
    evolve_moments_with(a, d, initial, t_grid, &EvolveOptions::default())
}

pub fn evolve_moments_with(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    initial: &GaussianMoments,
    t_grid: &[f64],
    options: &EvolveOptions,
) -> Result<Vec<GaussianMoments>> {
    let dim = initial.mean.len();
    if a.shape() != (dim, dim) || d.shape() != (dim, dim) {
        return Err(DflsError::InvalidDimension(format!(
            "A {}x{}, D {}x{} for a {dim}-dimensional state",
            a.nrows(),
            a.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    validate_grid(t_grid)?;
    if !options.allow_unphysical {
        let min = uncertainty_min_eigenvalue(&initial.cov);
        if min < -options.tol_psd {
            return Err(DflsError::UncertaintyViolation { min_eigenvalue: min });
        }
    }
    match options.propagator {
        Propagator::Exact => Ok(t_grid
            .iter()
            .map(|&t| exact_flow(a, d, initial, t))
            .collect()),
        Propagator::Rk4 { max_step } => {
            if !(max_step > 0.0) {
                return Err(DflsError::InvalidParameter("RK4 step must be positive".into()));
            }
            Ok(rk4_flow(a, d, initial, t_grid, max_step))
        }
    }
}

fn validate_grid(t_grid: &[f64]) -> Result<()> {
    match t_grid.first() {
        None => return Err(DflsError::InvalidParameter("empty time grid".into())),
        Some(&t0) if t0 != 0.0 => {
            return Err(DflsError::InvalidParameter(format!(
                "time grid starts at {t0}, expected 0"
            )))
        }
        _ => {}
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(DflsError::InvalidParameter(
            "time grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `V(t)` from `exp(t·[[I⊗A + A⊗I, vec D], [0, 0]])`.
fn exact_flow(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    initial: &GaussianMoments,
    t: f64,
) -> GaussianMoments {
    let dim = a.nrows();
    let n2 = dim * dim;
    let mean = (a * t).exp() * &initial.mean;

    let mut aug = DMatrix::zeros(n2 + 1, n2 + 1);
    aug.view_mut((0, 0), (n2, n2))
        .copy_from(&linalg::lyapunov_generator(a));
    aug.view_mut((0, n2), (n2, 1)).copy_from(&linalg::vec_of(d));
    let flow = (aug * t).exp();
    let v0 = linalg::vec_of(&initial.cov);
    let vt = flow.view((0, 0), (n2, n2)) * v0 + flow.view((0, n2), (n2, 1));
    let cov = linalg::symmetrize(&linalg::unvec(&vt, dim, dim));
    GaussianMoments { mean, cov }
}

fn rk4_flow(
    a: &DMatrix<f64>,
    d: &DMatrix<f64>,
    initial: &GaussianMoments,
    t_grid: &[f64],
    max_step: f64,
) -> Vec<GaussianMoments> {
    let rhs_v = |v: &DMatrix<f64>| a * v + v * a.transpose() + d;
    let mut mean = initial.mean.clone();
    let mut cov = initial.cov.clone();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(initial.clone());
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let steps = (span / max_step).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            let k1 = a * &mean;
            let k2 = a * (&mean + &k1 * (h / 2.0));
            let k3 = a * (&mean + &k2 * (h / 2.0));
            let k4 = a * (&mean + &k3 * h);
            mean += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);

            let l1 = rhs_v(&cov);
            let l2 = rhs_v(&(&cov + &l1 * (h / 2.0)));
            let l3 = rhs_v(&(&cov + &l2 * (h / 2.0)));
            let l4 = rhs_v(&(&cov + &l3 * h));
            cov += (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
        }
        out.push(GaussianMoments {
            mean: mean.clone(),
            cov: linalg::symmetrize(&cov),
        });
    }
    out
}

/// Unique solution of `AV + VAᵀ + D = 0` for Hurwitz `A`.
pub fn steady_covariance(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let dim = a.nrows();
    if !a.is_square() || d.shape() != (dim, dim) || dim == 0 {
        return Err(DflsError::InvalidDimension(format!(
            "A {}x{}, D {}x{}",
            a.nrows(),
            a.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    let abscissa = linalg::spectral_abscissa(a);
    if !(abscissa < 0.0) {
        return Err(DflsError::NoSteadyState { abscissa });
    }
    let generator = linalg::lyapunov_generator(a);
    let rhs = -linalg::vec_of(d);
    let sol = generator
        .lu()
        .solve(&rhs)
        .ok_or_else(|| DflsError::Numerical("singular Lyapunov operator".into()))?;
    let v = linalg::symmetrize(&linalg::unvec(&sol, dim, dim));
    let residual = linalg::max_abs(&(a * &v + &v * a.transpose() + d));
    let scale = linalg::norm2(a) * linalg::norm2(&v) + linalg::norm2(d);
    if residual > 1e-9 * scale.max(f64::MIN_POSITIVE) {
        return Err(DflsError::Numerical(format!(
            "Lyapunov residual {residual:.3e} too large"
        )));
    }
    Ok(v)
}

/// Spectral data deciding whether DF/D correlations die out.
///
/// The correlation block obeys `dV₂/dt = A₁V₂ + V₂A₂ᵀ`, whose generator has
/// eigenvalues `λ(A₁) + λ(A₂)`; correlations vanish in the long-time limit
/// iff every such sum has negative real part.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub eig_a1: Vec<Complex<f64>>,
    pub eig_a2: Vec<Complex<f64>>,
    /// `max Re(λ₁ + λ₂)`; `-inf` when either block is empty.
    pub worst_pair_real: f64,
    pub stable: bool,
    /// `|worst_pair_real| ≤ tol_margin`.
    pub marginal: bool,
    pub a2_hurwitz: bool,
    pub gdf_psd: bool,
    /// The PSD shortcut applies (`G_DF ⪰ 0`) and its verdict was compared.
    pub shortcut_used: bool,
    /// With the shortcut in use, whether `a2_hurwitz` agrees with `stable`.
    pub shortcut_agrees: bool,
}

/// Pairwise spectral test on `A₁ = Σ_ℓG_DF` and `A₂`.
pub fn decoupling_stability(
    g_df: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    tol_margin: f64,
) -> Result<StabilityReport> {
    if !g_df.is_square() || !g_df.nrows().is_multiple_of(2) || !a2.is_square() || !a2.nrows().is_multiple_of(2) {
        return Err(DflsError::InvalidDimension(format!(
            "G_DF {}x{}, A2 {}x{}",
            g_df.nrows(),
            g_df.ncols(),
            a2.nrows(),
            a2.ncols()
        )));
    }
    let a1 = sigma(g_df.nrows() / 2) * g_df;
    let eig_a1 = linalg::eigenvalues(&a1);
    let eig_a2 = linalg::eigenvalues(a2);
    let max1 = eig_a1.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let max2 = eig_a2.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let worst_pair_real = max1 + max2;
    let stable = worst_pair_real < -tol_margin;
    let a2_hurwitz = max2 < -tol_margin;
    let gdf_psd = linalg::symmetric_eigenvalues(g_df)
        .first()
        .is_none_or(|&m| m >= -1e-10);
    let shortcut_used = gdf_psd && !eig_a1.is_empty();
    let shortcut_agrees = !shortcut_used || a2_hurwitz == stable;
    Ok(StabilityReport {
        eig_a1,
        eig_a2,
        worst_pair_real,
        stable,
        marginal: worst_pair_real.abs() <= tol_margin,
        a2_hurwitz,
        gdf_psd,
        shortcut_used,
        shortcut_agrees,
    })
}

/// Frobenius norm of the `2ℓ × 2(n−ℓ)` DF/D correlation block of a
/// covariance written in DF-ordered coordinates.
pub fn correlation_block_norm(cov: &DMatrix<f64>, ell: usize) -> f64 {
    let dim = cov.nrows();
    let k = (2 * ell).min(dim);
    cov.view((0, k), (k, dim - k)).norm()
}

/// `det(2V)`.
fn det2(cov: &DMatrix<f64>) -> f64 {
    (cov * 2.0).determinant()
}

/// Purity `1/√det(2V)`.
pub fn purity(cov: &DMatrix<f64>) -> Result<f64> {
    if !cov.is_square() || !cov.nrows().is_multiple_of(2) || cov.nrows() == 0 {
        return Err(DflsError::InvalidDimension(format!(
            "covariance is {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let det = det2(cov);
    if !(det >= 1.0 - 1e-6) {
        return Err(DflsError::UnphysicalState { det });
    }
    Ok(1.0 / det.sqrt())
}

/// Symplectic eigenvalues (ascending, one per mode) of a positive definite
/// covariance: the moduli of the spectrum of `Σ_nV`, read off from the
/// symmetric matrix `KᵀK` with `K = V^{1/2}Σ_nV^{1/2}`.
pub fn symplectic_eigenvalues(cov: &DMatrix<f64>) -> Vec<f64> {
    let n = cov.nrows() / 2;
    let s = linalg::sqrt_psd(cov);
    let k = &s * sigma(n) * &s;
    let squares = linalg::symmetric_eigenvalues(&(k.transpose() * &k));
    // eigenvalues come in degenerate pairs
    squares
        .chunks(2)
        .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateMetrics {
    pub purity: f64,
    pub log_negativity: f64,
    /// Symplectic spectrum of the partially transposed covariance.
    pub symplectic_eigs_pt: Vec<f64>,
}

/// Purity and logarithmic negativity `max(0, −ln 2ν̃_min)` of a two-mode
/// state; the partial transpose flips the sign of the second momentum.
pub fn log_negativity_two_mode(cov: &DMatrix<f64>) -> Result<StateMetrics> {
    if cov.shape() != (4, 4) {
        return Err(DflsError::InvalidDimension(format!(
            "two-mode covariance must be 4x4, got {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let purity = purity(cov)?;
    let flip = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 1.0, -1.0]));
    let transposed = &flip * linalg::symmetrize(cov) * &flip;
    let nu = symplectic_eigenvalues(&transposed);
    let log_negativity = (-(2.0 * nu[0]).ln()).max(0.0);
    Ok(StateMetrics {
        purity,
        log_negativity,
        symplectic_eigs_pt: nu,
    })
}
