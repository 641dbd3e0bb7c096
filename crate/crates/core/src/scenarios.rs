//! Builders for the worked physical examples: two particles sharing a
//! dissipative or a dispersive channel, an optomechanical oscillator (with
//! and without an auxiliary mode), and three particles in a ring cavity.
//!
//! Every builder returns a system in interleaved coordinates.

use nalgebra::{Complex, DMatrix, DVector};

use crate::df::df_subspace;
use crate::error::{DflsError, Result};
use crate::linalg;
use crate::system::{basis_permutation, QuantumLinearSystem, DEFAULT_TOL_SYM};

/// A named example together with its physical parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    DissipativePair {
        kappa: f64,
        g1: DMatrix<f64>,
        g2: DMatrix<f64>,
    },
    DispersivePair {
        kappa: f64,
        g1: DMatrix<f64>,
        g2: DMatrix<f64>,
    },
    Optomech {
        m: f64,
        omega: f64,
        gamma: f64,
        kappa: f64,
    },
    OptomechExtended {
        m: f64,
        omega: f64,
        gamma: f64,
        kappa: f64,
        g: f64,
        mu: f64,
        nu: f64,
    },
    RingTrap {
        omega: f64,
        omega_prime: f64,
        k: f64,
        k2: f64,
        k3: f64,
        kappa: f64,
    },
}

impl Scenario {
    pub const KINDS: [&'static str; 5] = [
        "dissipative-pair",
        "dispersive-pair",
        "optomech",
        "optomech-extended",
        "ring-trap",
    ];

    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::DissipativePair { .. } => "dissipative-pair",
            Scenario::DispersivePair { .. } => "dispersive-pair",
            Scenario::Optomech { .. } => "optomech",
            Scenario::OptomechExtended { .. } => "optomech-extended",
            Scenario::RingTrap { .. } => "ring-trap",
        }
    }

    pub fn build(&self) -> Result<QuantumLinearSystem> {
        match self {
            Scenario::DissipativePair { kappa, g1, g2 } => dissipative_pair(*kappa, g1, g2),
            Scenario::DispersivePair { kappa, g1, g2 } => dispersive_pair(*kappa, g1, g2),
            &Scenario::Optomech {
                m,
                omega,
                gamma,
                kappa,
            } => optomech(m, omega, gamma, kappa),
            &Scenario::OptomechExtended {
                m,
                omega,
                gamma,
                kappa,
                g,
                mu,
                nu,
            } => optomech_extended(m, omega, gamma, kappa, g, mu, nu),
            &Scenario::RingTrap {
                omega,
                omega_prime,
                k,
                k2,
                k3,
                kappa,
            } => ring_trap(omega, omega_prime, k, k2, k3, kappa),
        }
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(DflsError::InvalidParameter(msg()))
    }
}

fn positive(name: &str, value: f64) -> Result<()> {
    require(value.is_finite() && value > 0.0, || {
        format!("{name} must be positive, got {value}")
    })
}

fn finite(name: &str, value: f64) -> Result<()> {
    require(value.is_finite(), || format!("{name} must be finite, got {value}"))
}

fn pair_block(name: &str, block: &DMatrix<f64>) -> Result<()> {
    if block.shape() != (2, 2) {
        return Err(DflsError::InvalidDimension(format!(
            "{name} is {}x{}, expected 2x2",
            block.nrows(),
            block.ncols()
        )));
    }
    let asym = (block[(0, 1)] - block[(1, 0)]).abs();
    if asym > DEFAULT_TOL_SYM {
        return Err(DflsError::InvalidHamiltonian(format!(
            "{name} is not symmetric (asymmetry {asym:.3e})"
        )));
    }
    Ok(())
}

fn pair_hamiltonian(g1: &DMatrix<f64>, g2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    pair_block("G1", g1)?;
    pair_block("G2", g2)?;
    let mut g = DMatrix::zeros(4, 4);
    for (r, c, block) in [(0, 0, g1), (0, 2, g2), (2, 0, g2), (2, 2, g1)] {
        g.view_mut((r, c), (2, 2)).copy_from(block);
    }
    Ok(g)
}

fn complex_vector(entries: &[(f64, f64)]) -> DVector<Complex<f64>> {
    DVector::from_iterator(entries.len(), entries.iter().map(|&(re, im)| Complex::new(re, im)))
}

/// Two particles sharing one dissipative channel, `L = √κ(b₁ + b₂)`.
pub fn dissipative_pair(kappa: f64, g1: &DMatrix<f64>, g2: &DMatrix<f64>) -> Result<QuantumLinearSystem> {
    positive("kappa", kappa)?;
    let g = pair_hamiltonian(g1, g2)?;
    let s = (kappa / 2.0).sqrt();
    let c = complex_vector(&[(s, 0.0), (0.0, s), (s, 0.0), (0.0, s)]);
    QuantumLinearSystem::assemble(2, g, vec![c], DEFAULT_TOL_SYM)
}

/// Two particles probed dispersively, `L = √(κ/2)(q₁ + q₂)`.
pub fn dispersive_pair(kappa: f64, g1: &DMatrix<f64>, g2: &DMatrix<f64>) -> Result<QuantumLinearSystem> {
    positive("kappa", kappa)?;
    let g = pair_hamiltonian(g1, g2)?;
    let s = (kappa / 2.0).sqrt();
    let c = complex_vector(&[(s, 0.0), (0.0, 0.0), (s, 0.0), (0.0, 0.0)]);
    QuantumLinearSystem::assemble(2, g, vec![c], DEFAULT_TOL_SYM)
}

/// Two-mode squeezed vacuum covariance (interleaved), squeezing `r`.
pub fn tms_covariance(r: f64) -> DMatrix<f64> {
    let (e, f) = (r.exp(), (-r).exp());
    #[rustfmt::skip]
    let entries = [
        1.0 + e, 0.0,     1.0 - e, 0.0,
        0.0,     1.0 + f, 0.0,     1.0 - f,
        1.0 - e, 0.0,     1.0 + e, 0.0,
        0.0,     1.0 - f, 0.0,     1.0 + f,
    ];
    DMatrix::from_row_slice(4, 4, &entries) * 0.25
}

/// Symplectic basis `((q₁−q₂)/√2, (p₁−p₂)/√2)` of the relative mode of a pair.
pub fn pair_df_reference() -> DMatrix<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_column_slice(4, 2, &[h, 0.0, -h, 0.0, 0.0, h, 0.0, -h])
}

fn optomech_params(m: f64, omega: f64, gamma: f64, kappa: f64) -> Result<()> {
    positive("m", m)?;
    positive("omega", omega)?;
    positive("kappa", kappa)?;
    finite("gamma", gamma)
}

/// Oscillator `(q₁, p₁)` coupled by radiation pressure to a damped cavity
/// mode `(q₂, p₂)`.
///
/// The drift is `[[0, 1/m, 0, 0], [−mω², 0, γ, 0], [0, 0, −κ, 0], [γ, 0, 0, −κ]]`,
/// with input matrix `−√(2κ)` on the cavity quadratures.
pub fn optomech(m: f64, omega: f64, gamma: f64, kappa: f64) -> Result<QuantumLinearSystem> {
    optomech_params(m, omega, gamma, kappa)?;
    let mut g = DMatrix::zeros(4, 4);
    g[(0, 0)] = m * omega * omega;
    g[(1, 1)] = 1.0 / m;
    g[(0, 2)] = -gamma;
    g[(2, 0)] = -gamma;
    let s = kappa.sqrt();
    let c = complex_vector(&[(0.0, 0.0), (0.0, 0.0), (s, 0.0), (0.0, s)]);
    QuantumLinearSystem::assemble(2, g, vec![c], DEFAULT_TOL_SYM)
}

/// [`optomech`] plus an auxiliary mode `(q₃, p₃)` with Hamiltonian
/// `(−νq₃² + μp₃²)/2`, coupled to the cavity through `−g q₂q₃`.
pub fn optomech_extended(
    m: f64,
    omega: f64,
    gamma: f64,
    kappa: f64,
    g: f64,
    mu: f64,
    nu: f64,
) -> Result<QuantumLinearSystem> {
    optomech_params(m, omega, gamma, kappa)?;
    finite("g", g)?;
    finite("mu", mu)?;
    finite("nu", nu)?;
    let base = optomech(m, omega, gamma, kappa)?;
    let mut h = DMatrix::zeros(6, 6);
    h.view_mut((0, 0), (4, 4)).copy_from(base.hamiltonian());
    h[(2, 4)] = -g;
    h[(4, 2)] = -g;
    h[(4, 4)] = -nu;
    h[(5, 5)] = mu;
    let c = base.couplings()[0].clone().insert_rows(4, 2, Complex::new(0.0, 0.0));
    QuantumLinearSystem::assemble(3, h, vec![c], DEFAULT_TOL_SYM)
}

/// Auxiliary-mode parameters `(μ, ν)` that give the extended optomechanical
/// system a DF mode.
///
/// Rank deficiency of the observability matrix forces `μν = −ω²`, and
/// keeping the dark combination of oscillator and auxiliary mode closed
/// under the dynamics forces `μ = 1/m`; so `(μ, ν) = (1/m, −mω²)`
/// independently of `g`. The solution is re-assembled and checked.
pub fn solve_optomech_df(m: f64, omega: f64, gamma: f64, kappa: f64, g: f64) -> Result<(f64, f64)> {
    optomech_params(m, omega, gamma, kappa)?;
    finite("g", g)?;
    if g == 0.0 || gamma == 0.0 {
        return Err(DflsError::EngineeringInfeasible(
            "both g and gamma must be nonzero for the auxiliary mode to couple".into(),
        ));
    }
    let mu = 1.0 / m;
    let nu = -m * omega * omega;
    let sys = optomech_extended(m, omega, gamma, kappa, g, mu, nu)?;
    let sub = df_subspace(&sys, crate::df::DEFAULT_TOL_RANK)?;
    if sub.dim() != 2 {
        return Err(DflsError::EngineeringInfeasible(format!(
            "re-assembled system has a {}-dimensional DF subspace, expected 2",
            sub.dim()
        )));
    }
    Ok((mu, nu))
}

/// Symplectic basis of the dark combination `(g q₁ − γ q₃)/γ′` and its
/// momentum partner, `γ′ = √(g² + γ²)`.
pub fn optomech_df_reference(g: f64, gamma: f64) -> DMatrix<f64> {
    let norm = g.hypot(gamma);
    let (a, b) = (g / norm, -gamma / norm);
    DMatrix::from_column_slice(
        6,
        2,
        &[a, 0.0, 0.0, 0.0, b, 0.0, 0.0, a, 0.0, 0.0, 0.0, b],
    )
}

/// Position block of the ring-trap Hamiltonian (unit mass): on-site
/// frequencies `ω, ω, ω′` plus springs `k` (1–2), `k₂` (2–3) and `k₃` (3–1).
pub fn ring_position_block(omega: f64, omega_prime: f64, k: f64, k2: f64, k3: f64) -> DMatrix<f64> {
    let w2 = omega * omega;
    #[rustfmt::skip]
    let entries = [
        w2 + k + k3, -k,          -k3,
        -k,          w2 + k + k2, -k2,
        -k3,         -k2,         omega_prime * omega_prime + k2 + k3,
    ];
    DMatrix::from_row_slice(3, 3, &entries)
}

/// Three unit-mass particles in a ring cavity sharing the decay channel
/// `L = √κ(b₁ + b₂ + b₃)`.
pub fn ring_trap(
    omega: f64,
    omega_prime: f64,
    k: f64,
    k2: f64,
    k3: f64,
    kappa: f64,
) -> Result<QuantumLinearSystem> {
    positive("omega", omega)?;
    positive("omega_prime", omega_prime)?;
    positive("kappa", kappa)?;
    for (name, value) in [("k", k), ("k2", k2), ("k3", k3)] {
        require(value.is_finite() && value >= 0.0, || {
            format!("spring constant {name} must be non-negative, got {value}")
        })?;
    }
    let perm = basis_permutation(3)?;
    let grouped = linalg::block_diag(
        &ring_position_block(omega, omega_prime, k, k2, k3),
        &DMatrix::identity(3, 3),
    );
    let s = (kappa / 2.0).sqrt();
    let c_grouped = complex_vector(&[(s, 0.0), (s, 0.0), (s, 0.0), (0.0, s), (0.0, s), (0.0, s)]);
    QuantumLinearSystem::assemble(
        3,
        perm.to_interleaved(&grouped),
        vec![perm.vector_to_interleaved(&c_grouped)],
        DEFAULT_TOL_SYM,
    )
}

/// Interleaved DF basis of the ring trap built from the position
/// combinations `(1, −1, 0)/√2` and `(1, 1, −2)/√6`, each paired with the
/// same combination of momenta. Columns are `(q′₁, p′₁, q′₂, p′₂)`.
pub fn ring_df_reference() -> DMatrix<f64> {
    let a = std::f64::consts::FRAC_1_SQRT_2;
    let b = 1.0 / 6.0_f64.sqrt();
    let combos = [[a, -a, 0.0], [b, b, -2.0 * b]];
    let mut t = DMatrix::zeros(6, 4);
    for (j, combo) in combos.iter().enumerate() {
        for (particle, &w) in combo.iter().enumerate() {
            t[(2 * particle, 2 * j)] = w;
            t[(2 * particle + 1, 2 * j + 1)] = w;
        }
    }
    t
}

/// Auxiliary frequency and springs `(ω′, k₂, k₃)` that keep the ring-trap DF
/// pair decoupled and make it mimic two identical coupled particles:
/// `ω′ = ω`, `k₂ = √3k`, `k₃ = (2 − √3)k`.
pub fn solve_ring_df(omega: f64, k: f64) -> Result<(f64, f64, f64)> {
    positive("omega", omega)?;
    positive("k", k)?;
    let r3 = 3.0_f64.sqrt();
    Ok((omega, r3 * k, (2.0 - r3) * k))
}
