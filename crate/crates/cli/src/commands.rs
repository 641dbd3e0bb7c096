use std::collections::BTreeMap;
use std::fmt::Write as _;

use dfls::df::conjugate_kernel_residual;
use dfls::gaussian::{EvolveOptions, Propagator};
use dfls::scenarios::{self, tms_covariance};
use dfls::{
    correlation_block_norm, decompose, decoupling_stability, evolve_moments_with,
    hamiltonian_preserves_df, log_negativity_two_mode, purity, DfDecomposition, GaussianMoments,
    QuantumLinearSystem,
};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{InitialState, RunConfig, Tolerances};
use crate::error::CliError;
use crate::report::{num, AnalysisReport};

/// Decomposition, stability and (optionally) candidate-Hamiltonian check of
/// one system. When `gauge` spans the same DF subspace, the DF pairs are
/// rotated onto it so that `G_DF` is reported in that basis.
pub fn analyze_system(
    sys: &QuantumLinearSystem,
    tol: &Tolerances,
    candidate: Option<&DMatrix<f64>>,
    gauge: Option<&DMatrix<f64>>,
) -> Result<(AnalysisReport, Option<DfDecomposition>), CliError> {
    let mut dec = decompose(sys, tol.tol_rank)?;
    if let (Some(d), Some(reference)) = (&dec, gauge) {
        if let Ok(aligned) = d.with_df_gauge(sys, reference, tol.tol_rank) {
            dec = Some(aligned);
        }
    }
    let stability = dec
        .as_ref()
        .map(|d| decoupling_stability(&d.g_df, &d.a2, tol.tol_margin))
        .transpose()?;
    let preservation = match candidate {
        None => None,
        Some(g) => {
            // DF basis of the bare coupling (G = 0)
            let bare = sys.with_hamiltonian(DMatrix::zeros(sys.dim(), sys.dim()))?;
            match decompose(&bare, tol.tol_rank)? {
                Some(b) => Some(hamiltonian_preserves_df(g, &b.t1, sys.c(), tol.tol_rank)?),
                None => None,
            }
        }
    };
    let report = AnalysisReport::new(
        sys.modes(),
        sys.fields(),
        dec.as_ref(),
        stability.as_ref(),
        conjugate_kernel_residual(sys, tol.tol_rank),
        preservation.as_ref(),
        tol.tol_rank,
        tol.tol_margin,
    );
    Ok((report, dec))
}

pub fn analyze(config: &RunConfig) -> Result<AnalysisReport, CliError> {
    let sys = config.system()?;
    let (report, _) = analyze_system(&sys, &config.tolerances, config.candidate_g.as_ref(), None)?;
    Ok(report)
}

/// Coordinate labels `q1, p1, q2, p2, …`.
fn labels(n: usize) -> Vec<String> {
    (1..=n)
        .flat_map(|i| [format!("q{i}"), format!("p{i}")])
        .collect()
}

fn initial_moments(state: &InitialState, n: usize) -> Result<GaussianMoments, CliError> {
    Ok(match state {
        InitialState::Vacuum => GaussianMoments::vacuum(n),
        InitialState::TwoModeSqueezed { r } => {
            if n != 2 {
                return Err(CliError::Validation(
                    "two-mode squeezed initial state needs n = 2".into(),
                ));
            }
            GaussianMoments::unchecked(nalgebra::DVector::zeros(4), tms_covariance(*r))?
        }
        InitialState::Explicit { mean, cov } => {
            if mean.len() != 2 * n {
                return Err(CliError::Validation(format!(
                    "initial mean has {} entries, system needs {}",
                    mean.len(),
                    2 * n
                )));
            }
            GaussianMoments::unchecked(mean.clone(), cov.clone())?
        }
    })
}

fn optional(value: Result<f64, dfls::DflsError>) -> String {
    value.map_or_else(|_| "nan".to_string(), num)
}

/// Time series of means, covariances and state metrics as CSV.
pub fn simulate(config: &RunConfig, allow_unphysical: bool) -> Result<String, CliError> {
    let sys = config.system()?;
    let grid = config
        .time_grid
        .ok_or_else(|| CliError::Validation("time_grid is required for simulate".into()))?;
    let n = sys.modes();
    let initial = initial_moments(&config.initial_state, n)?;
    let options = EvolveOptions {
        propagator: Propagator::Exact,
        tol_psd: config.tolerances.tol_psd,
        allow_unphysical,
    };
    let traj = evolve_moments_with(sys.a(), sys.d(), &initial, &grid.points(), &options)?;
    let dec = decompose(&sys, config.tolerances.tol_rank)?;

    let names = labels(n);
    let mut header = vec!["t".to_string()];
    header.extend(names.iter().map(|x| format!("mean_{x}")));
    for i in 0..2 * n {
        for j in i..2 * n {
            header.push(format!("cov_{}_{}", names[i], names[j]));
        }
    }
    header.push("purity".into());
    if dec.is_some() {
        header.push("corr_block_norm".into());
    }
    if n == 2 {
        header.push("log_negativity".into());
    }

    let mut out = header.join(",");
    out.push('\n');
    for (t, state) in grid.points().iter().zip(&traj) {
        let mut row = vec![num(*t)];
        row.extend(state.mean.iter().map(|&x| num(x)));
        for i in 0..2 * n {
            for j in i..2 * n {
                row.push(num(state.cov[(i, j)]));
            }
        }
        row.push(optional(purity(&state.cov)));
        if let Some(d) = &dec {
            let t = d.transform();
            let primed = t.transpose() * &state.cov * &t;
            row.push(num(correlation_block_norm(&primed, d.ell)));
        }
        if n == 2 {
            row.push(optional(
                log_negativity_two_mode(&state.cov).map(|m| m.log_negativity),
            ));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineerReport {
    pub kind: String,
    pub solution: BTreeMap<String, f64>,
    pub analysis: AnalysisReport,
}

impl EngineerReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("engineered {}:\n", self.kind);
        for (k, v) in &self.solution {
            let _ = writeln!(out, "  {k} = {}", num(*v));
        }
        out.push_str(&self.analysis.to_text());
        out
    }
}

/// Solves the DF engineering condition of a scenario, rebuilds the system
/// with the solution and re-analyzes it.
pub fn engineer(config: &RunConfig) -> Result<EngineerReport, CliError> {
    let spec = config.scenario().ok_or_else(|| {
        CliError::Validation("engineer needs a scenario of kind optomech-extended or ring-trap".into())
    })?;
    let tol = &config.tolerances;
    let mut solution = BTreeMap::new();
    let (sys, gauge, needs_stability) = match spec.kind.as_str() {
        "optomech-extended" => {
            let (m, omega, gamma, kappa, g) = (
                spec.scalar("m")?,
                spec.scalar("omega")?,
                spec.scalar("gamma")?,
                spec.scalar("kappa")?,
                spec.scalar("g")?,
            );
            let (mu, nu) = scenarios::solve_optomech_df(m, omega, gamma, kappa, g)?;
            solution.insert("mu".to_string(), mu);
            solution.insert("nu".to_string(), nu);
            (
                scenarios::optomech_extended(m, omega, gamma, kappa, g, mu, nu)?,
                scenarios::optomech_df_reference(g, gamma),
                false,
            )
        }
        "ring-trap" => {
            let (omega, k, kappa) = (spec.scalar("omega")?, spec.scalar("k")?, spec.scalar("kappa")?);
            let (omega_prime, k2, k3) = scenarios::solve_ring_df(omega, k)?;
            solution.insert("omega_prime".to_string(), omega_prime);
            solution.insert("k2".to_string(), k2);
            solution.insert("k3".to_string(), k3);
            (
                scenarios::ring_trap(omega, omega_prime, k, k2, k3, kappa)?,
                scenarios::ring_df_reference(),
                true,
            )
        }
        other => {
            return Err(CliError::Validation(format!(
                "engineer supports optomech-extended and ring-trap, not {other}"
            )))
        }
    };
    let (analysis, _) = analyze_system(&sys, tol, None, Some(&gauge))?;
    let expected_modes = gauge.ncols() / 2;
    if analysis.df_modes != expected_modes {
        return Err(CliError::Infeasible(format!(
            "closure check: re-assembled system has {} DF modes, expected {expected_modes}",
            analysis.df_modes
        )));
    }
    if needs_stability && !analysis.stability.as_ref().is_some_and(|s| s.stable) {
        return Err(CliError::Infeasible(
            "closure check: engineered DF block does not decouple".into(),
        ));
    }
    Ok(EngineerReport {
        kind: spec.kind.clone(),
        solution,
        analysis,
    })
}
