//! Structural properties that must hold for every linear open quantum
//! system, checked on seeded random instances.

mod common;

use common::*;
use dfls::df::{conjugate_kernel_residual, unobservable_subspace};
use dfls::gaussian::EvolveOptions;
use dfls::{
    correlation_block_norm, decompose, decoupling_stability, df_subspace, evolve_moments,
    evolve_moments_with, is_symplectic, linalg, purity, steady_covariance, symplectic_form,
    uncertainty_min_eigenvalue, GaussianMoments, DEFAULT_TOL_RANK,
};
use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        rng_seed: RngSeed::Fixed(base_seed()),
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(96))]

    #[test]
    fn conjugate_unobservable_equals_uncontrollable(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let sys = random_mixed_system(&mut rng);
        let residual = conjugate_kernel_residual(&sys, DEFAULT_TOL_RANK);
        prop_assert!(residual < 1e-8, "principal angle {residual:.3e}");
    }

    #[test]
    fn df_subspace_dimension_is_even(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let sys = random_mixed_system(&mut rng);
        let sub = df_subspace(&sys, DEFAULT_TOL_RANK).unwrap();
        prop_assert_eq!(sub.dim() % 2, 0);
    }

    #[test]
    fn hidden_blocks_are_recovered(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=4);
        let ell = rng.gen_range(1..n);
        let m = rng.gen_range(1..=3);
        let sys = random_block_system(&mut rng, n, ell, m);
        let dec = decompose(&sys, DEFAULT_TOL_RANK).unwrap().unwrap();
        prop_assert_eq!(dec.ell, ell);
        prop_assert!(dec.residuals.max() < 1e-9, "{:?}", dec.residuals);
        let t = dec.transform();
        let check = is_symplectic(&t, 1e-10).unwrap();
        prop_assert!(check.symplectic, "TᵀΣT residual {:.3e}", check.residual);
        prop_assert!(is_symplectic(&dec.t1, 1e-10).unwrap().symplectic);
        prop_assert!(is_symplectic(&dec.t2, 1e-10).unwrap().symplectic);
        prop_assert!((t.transpose() * &t - DMatrix::identity(2 * n, 2 * n)).amax() < 1e-10);
    }

    #[test]
    fn df_block_survives_coordinate_changes(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(2..=3);
        let ell = rng.gen_range(1..n);
        let sys = random_block_system(&mut rng, n, ell, 1);
        let before = decompose(&sys, DEFAULT_TOL_RANK).unwrap().unwrap();
        let reference = linalg::eigenvalues(&before.a1);
        let same_spectrum = |k: &DMatrix<f64>, a: &DMatrix<f64>| {
            let restricted = k.transpose() * a * k;
            same_multiset(&linalg::eigenvalues(&restricted), &reference, 1e-7)
        };

        // Orthogonal symplectic changes keep the DF intersection itself.
        let r = random_orthosymplectic(&mut rng, n);
        let rotated = sys.transformed(&r).unwrap();
        let sub = df_subspace(&rotated, DEFAULT_TOL_RANK).unwrap();
        prop_assert_eq!(sub.dim(), 2 * ell);
        prop_assert!(same_spectrum(&sub.basis, rotated.a()));

        // General symplectic changes map the unobservable subspace along,
        // with the same internal dynamics.
        let s = random_symplectic(&mut rng, n, 0.3);
        let moved = sys.transformed(&s).unwrap();
        prop_assert!((moved.a() - s.clone().try_inverse().unwrap() * sys.a() * &s).amax() < 1e-8);
        let unobs = unobservable_subspace(&moved, DEFAULT_TOL_RANK);
        prop_assert_eq!(unobs.dim(), 2 * ell);
        prop_assert!(same_spectrum(&unobs.basis, moved.a()));
    }

    #[test]
    fn evolution_preserves_uncertainty_relation(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(1..=3);
        let m = rng.gen_range(0..=2);
        let sys = random_system(&mut rng, n, m);
        let v0 = random_physical_covariance(&mut rng, n);
        let mean = DVector::from_fn(2 * n, |_, _| rng.gen::<f64>() - 0.5);
        let initial = GaussianMoments::new(mean, v0, 1e-9).unwrap();
        let grid: Vec<f64> = (0..=5).map(|k| k as f64 * 0.3).collect();
        for state in evolve_moments(sys.a(), sys.d(), &initial, &grid).unwrap() {
            let min = uncertainty_min_eigenvalue(&state.cov);
            prop_assert!(min >= -1e-9, "min eigenvalue {min:.3e}");
            prop_assert!(purity(&state.cov).unwrap() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn steady_state_is_the_long_time_limit(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let n = rng.gen_range(1..=3);
        let sys = random_system(&mut rng, n, 2);
        let abscissa = linalg::spectral_abscissa(sys.a());
        prop_assume!(abscissa < -0.05);
        let v = steady_covariance(sys.a(), sys.d()).unwrap();
        prop_assert!(uncertainty_min_eigenvalue(&v) >= -1e-9);
        let t_end = 40.0 / -abscissa;
        let initial = GaussianMoments::vacuum(n);
        let traj = evolve_moments(sys.a(), sys.d(), &initial, &[0.0, t_end]).unwrap();
        prop_assert!((&traj[1].cov - &v).amax() < 1e-8 * v.amax().max(1.0));
    }

    #[test]
    fn stability_verdict_matches_correlation_decay(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let ell = rng.gen_range(1..=2);
        let rest = rng.gen_range(1..=2);
        let stable_target = rng.gen_bool(0.5);
        let target = if stable_target {
            -rng.gen_range(0.2..1.0)
        } else {
            rng.gen_range(0.05..0.5)
        };
        let (g_df, a2) = random_stability_blocks(&mut rng, ell, rest, target);
        let report = decoupling_stability(&g_df, &a2, 1e-10).unwrap();
        prop_assert!((report.worst_pair_real - target).abs() < 1e-8);
        prop_assert_eq!(report.stable, stable_target);
        prop_assert!(report.shortcut_agrees);

        let ratio = correlation_decay_ratio(&mut rng, &g_df, &a2, 30.0 / target.abs());
        if report.stable {
            prop_assert!(ratio < 1e-6, "stable but ratio {ratio:.3e}");
        } else {
            prop_assert!(ratio > 1e3, "unstable but ratio {ratio:.3e}");
        }
    }
}

/// Greedy nearest matching of two spectra, insensitive to ordering.
fn same_multiset(a: &[Complex<f64>], b: &[Complex<f64>], tol: f64) -> bool {
    let mut pool = b.to_vec();
    a.len() == b.len()
        && a.iter().all(|x| {
            let best = pool
                .iter()
                .enumerate()
                .min_by(|(_, p), (_, q)| (*p - x).norm().total_cmp(&(*q - x).norm()));
            match best {
                Some((i, y)) if (y - x).norm() < tol => {
                    pool.swap_remove(i);
                    true
                }
                _ => false,
            }
        })
}

/// `‖V₂(t)‖/‖V₂(0)‖` for the block drift `Σ_ℓG_DF ⊕ A₂` started from a
/// random correlation block with empty diagonal blocks.
fn correlation_decay_ratio(
    rng: &mut impl Rng,
    g_df: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    t: f64,
) -> f64 {
    let ell = g_df.nrows() / 2;
    let dim = g_df.nrows() + a2.nrows();
    let a = linalg::block_diag(&(symplectic_form(ell).unwrap() * g_df), a2);
    let v2 = gaussian_matrix(rng, 2 * ell, a2.nrows(), 1.0);
    let mut v0 = DMatrix::zeros(dim, dim);
    v0.view_mut((0, 2 * ell), v2.shape()).copy_from(&v2);
    v0.view_mut((2 * ell, 0), (v2.ncols(), v2.nrows())).copy_from(&v2.transpose());
    let initial = GaussianMoments::unchecked(DVector::zeros(dim), v0).unwrap();
    let opts = EvolveOptions {
        allow_unphysical: true,
        ..EvolveOptions::default()
    };
    let d = DMatrix::zeros(dim, dim);
    let traj = evolve_moments_with(&a, &d, &initial, &[0.0, t], &opts).unwrap();
    correlation_block_norm(&traj[1].cov, ell) / correlation_block_norm(&traj[0].cov, ell)
}

#[test]
fn every_constructed_transform_is_symplectic_on_fixed_seeds() {
    let mut rng = rng(7);
    for _ in 0..100 {
        let sys = random_mixed_system(&mut rng);
        if let Some(dec) = decompose(&sys, DEFAULT_TOL_RANK).unwrap() {
            assert!(is_symplectic(&dec.transform(), 1e-10).unwrap().symplectic);
        }
    }
}
