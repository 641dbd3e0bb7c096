//! Seeded random systems shared by the property tests.
#![allow(dead_code)]

use dfls::{linalg, symplectic_form, QuantumLinearSystem};
use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Base seed, overridable through `DFLS_SEED`.
pub fn base_seed() -> u64 {
    std::env::var("DFLS_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0x5eed_df15)
}

pub fn rng(stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(base_seed() ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn gaussian_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| scale * (rng.gen::<f64>() * 2.0 - 1.0))
}

pub fn random_symmetric(rng: &mut impl Rng, dim: usize, scale: f64) -> DMatrix<f64> {
    linalg::symmetrize(&gaussian_matrix(rng, dim, dim, scale))
}

pub fn random_psd(rng: &mut impl Rng, dim: usize, scale: f64) -> DMatrix<f64> {
    let m = gaussian_matrix(rng, dim, dim, scale);
    &m * m.transpose()
}

/// `exp(K)` with `K` antisymmetric and commuting with `Σ_n`.
pub fn random_orthosymplectic(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let w = gaussian_matrix(rng, 2 * n, 2 * n, 1.5);
    let w = (&w - w.transpose()) * 0.5;
    let s = symplectic_form(n).unwrap();
    let k = (&w + &s * &w * s.transpose()) * 0.5;
    k.exp()
}

/// `exp(Σ_n H)` with `H` symmetric: symplectic but generally not orthogonal.
pub fn random_symplectic(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let h = random_symmetric(rng, 2 * n, scale);
    (symplectic_form(n).unwrap() * h).exp()
}

pub fn random_coupling(rng: &mut impl Rng, dim: usize, scale: f64) -> DVector<Complex<f64>> {
    DVector::from_fn(dim, |_, _| {
        Complex::new(
            scale * (rng.gen::<f64>() * 2.0 - 1.0),
            scale * (rng.gen::<f64>() * 2.0 - 1.0),
        )
    })
}

/// Generic system: almost surely without DF modes.
pub fn random_system(rng: &mut impl Rng, n: usize, m: usize) -> QuantumLinearSystem {
    let g = random_symmetric(rng, 2 * n, 1.0);
    let couplings = (0..m).map(|_| random_coupling(rng, 2 * n, 1.0)).collect();
    QuantumLinearSystem::assemble(n, g, couplings, 1e-12).unwrap()
}

/// System whose first `ell` modes form a DF block, hidden by a random
/// orthogonal symplectic change of coordinates. The dissipative block gets
/// couplings on every mode, so it is generically fully observable.
pub fn random_block_system(rng: &mut impl Rng, n: usize, ell: usize, m: usize) -> QuantumLinearSystem {
    assert!(ell < n && m >= 1);
    let g_df = random_symmetric(rng, 2 * ell, 1.0);
    let g_d = random_symmetric(rng, 2 * (n - ell), 1.0);
    let g = linalg::block_diag(&g_df, &g_d);
    let couplings = (0..m)
        .map(|_| {
            let tail = random_coupling(rng, 2 * (n - ell), 1.0);
            let mut c = DVector::zeros(2 * n);
            c.rows_mut(2 * ell, 2 * (n - ell)).copy_from(&tail);
            c
        })
        .collect();
    let sys = QuantumLinearSystem::assemble(n, g, couplings, 1e-12).unwrap();
    sys.transformed(&random_orthosymplectic(rng, n)).unwrap()
}

/// Mixture used by the kernel and decomposition properties: generic systems,
/// hidden DF blocks and closed systems.
pub fn random_mixed_system(rng: &mut impl Rng) -> QuantumLinearSystem {
    let n = rng.gen_range(1..=4);
    let m = rng.gen_range(1..=3);
    match rng.gen_range(0..4) {
        0 => random_system(rng, n, m),
        1 => {
            let g = random_symmetric(rng, 2 * n, 1.0);
            QuantumLinearSystem::assemble(n, g, Vec::new(), 1e-12).unwrap()
        }
        _ if n > 1 => {
            let ell = rng.gen_range(1..n);
            random_block_system(rng, n, ell, m)
        }
        _ => random_system(rng, n, m),
    }
}

/// A covariance satisfying the uncertainty relation: `SSᵀ/2` plus a PSD part.
pub fn random_physical_covariance(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let s = random_symplectic(rng, n, 0.4);
    &s * s.transpose() * 0.5 + random_psd(rng, 2 * n, 0.3)
}

/// DF/D block drifts `(G_DF, A₂)` with a prescribed value of
/// `max Re λ(Σ_ℓG_DF) + max Re λ(A₂)`.
///
/// Unstable targets use a positive semidefinite `G_DF` (so the DF spectrum
/// is imaginary and all growth comes from `A₂`); stable targets may use an
/// indefinite `G_DF` with spectral abscissa at most `0.3`.
pub fn random_stability_blocks(
    rng: &mut impl Rng,
    ell: usize,
    rest: usize,
    target: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let g_df = if target > 0.0 || rng.gen_bool(0.5) {
        random_psd(rng, 2 * ell, 1.0)
    } else {
        let g = random_symmetric(rng, 2 * ell, 1.0);
        let a = linalg::spectral_abscissa(&(symplectic_form(ell).unwrap() * &g));
        if a > 0.3 {
            g * (0.3 / a)
        } else {
            g
        }
    };
    let a1_abscissa = linalg::spectral_abscissa(&(symplectic_form(ell).unwrap() * &g_df));
    let r = gaussian_matrix(rng, 2 * rest, 2 * rest, 1.0);
    let shift = linalg::spectral_abscissa(&r) + a1_abscissa - target;
    let a2 = r - DMatrix::identity(2 * rest, 2 * rest) * shift;
    (g_df, a2)
}
