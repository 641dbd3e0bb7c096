//! Detection and construction of decoherence-free (DF) subsystems.
//!
//! A DF mode is a canonical pair that is simultaneously uncontrollable from
//! the input noise and unobservable in the output. Such directions exist
//! exactly when `Ker(𝒪) ∩ Ker(𝒪Σ_n)` is nonzero, and that intersection is
//! always Σ-invariant, so it can be spanned by conjugate pairs
//! `(v, Σ_nᵀv)`. [`decompose`] builds the symplectic orthogonal transform
//! `T = (T₁, T₂)` that splits the system into a DF block driven only by
//! `G_DF = T₁ᵀGT₁` and a dissipative remainder.

use nalgebra::{DMatrix, DVector};

use crate::error::{DflsError, Result};
use crate::linalg::{self, columns_to_matrix, norm2};
use crate::system::{sigma, QuantumLinearSystem, SymplecticStructure};

/// Default relative rank tolerance.
pub const DEFAULT_TOL_RANK: f64 = 1e-9;

/// Raw Kalman power stacks with exactly `2n` powers (`0..2n`).
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanMatrices {
    /// `(B, AB, …, A^{2n-1}B)`, `2n × (2n·2m)`.
    pub ctrb: DMatrix<f64>,
    /// `(C; CA; …; CA^{2n-1})`, `(2m·2n) × 2n`.
    pub obsv: DMatrix<f64>,
}

pub fn kalman_matrices(sys: &QuantumLinearSystem) -> KalmanMatrices {
    let dim = sys.dim();
    let cols = sys.b().ncols();
    let rows = sys.c().nrows();
    let mut ctrb = DMatrix::zeros(dim, dim * cols);
    let mut obsv = DMatrix::zeros(dim * rows, dim);
    let mut ab = sys.b().clone();
    let mut ca = sys.c().clone();
    for k in 0..dim {
        ctrb.view_mut((0, k * cols), (dim, cols)).copy_from(&ab);
        obsv.view_mut((k * rows, 0), (rows, dim)).copy_from(&ca);
        ab = sys.a() * ab;
        ca *= sys.a();
    }
    KalmanMatrices { ctrb, obsv }
}

/// Orthonormal basis of a numerical kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBasis {
    pub basis: DMatrix<f64>,
    pub tol_rank: f64,
}

impl KernelBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }
}

/// Kernel of `m` from the right singular vectors with `σ ≤ tol_rank·σ_max`.
pub fn kernel_basis(m: &DMatrix<f64>, tol_rank: f64) -> KernelBasis {
    KernelBasis {
        basis: linalg::kernel(m, tol_rank),
        tol_rank,
    }
}

/// Orthonormal basis of the Krylov space `span{S, MS, M²S, …}`, built by
/// orthogonal iteration. New directions whose component outside the
/// current span is below `tol·‖M‖` are discarded.
fn krylov_span(m: &DMatrix<f64>, start: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let dim = m.nrows();
    let mut q = linalg::range(start, tol);
    if q.ncols() == 0 {
        return DMatrix::zeros(dim, 0);
    }
    let threshold = tol * norm2(m);
    let mut fresh = q.clone();
    while fresh.ncols() > 0 && q.ncols() < dim {
        let mut z = m * &fresh;
        for _ in 0..2 {
            z -= &q * (q.transpose() * &z);
        }
        fresh = linalg::range_abs(&z, threshold);
        if fresh.ncols() > 0 {
            // re-orthogonalize the accepted block against the current span
            fresh -= &q * (q.transpose() * &fresh);
            fresh = linalg::range_abs(&fresh, 0.5);
            q = linalg::hstack(&q, &fresh);
        }
    }
    q
}

/// Orthonormal basis of the observable space `Range(𝒪ᵀ)`.
pub fn observable_space(sys: &QuantumLinearSystem, tol_rank: f64) -> DMatrix<f64> {
    krylov_span(&sys.a().transpose(), &sys.c().transpose(), tol_rank)
}

/// Orthonormal basis of the controllable space `Range(𝒞)`.
pub fn controllable_space(sys: &QuantumLinearSystem, tol_rank: f64) -> DMatrix<f64> {
    krylov_span(sys.a(), sys.b(), tol_rank)
}

/// `Ker(𝒪)`, the unobservable subspace.
pub fn unobservable_subspace(sys: &QuantumLinearSystem, tol_rank: f64) -> KernelBasis {
    KernelBasis {
        basis: linalg::complement(&observable_space(sys, tol_rank), sys.dim()),
        tol_rank,
    }
}

/// `Ker(𝒪Σ_n)`.
pub fn conjugate_unobservable_subspace(sys: &QuantumLinearSystem, tol_rank: f64) -> KernelBasis {
    let q = observable_space(sys, tol_rank);
    let basis = if q.ncols() == 0 {
        DMatrix::identity(sys.dim(), sys.dim())
    } else {
        linalg::kernel(&(q.transpose() * sys.sigma()), tol_rank)
    };
    KernelBasis { basis, tol_rank }
}

/// `Ker(𝒞ᵀ)`, the orthogonal complement of the controllable space.
pub fn uncontrollable_subspace(sys: &QuantumLinearSystem, tol_rank: f64) -> KernelBasis {
    KernelBasis {
        basis: linalg::complement(&controllable_space(sys, tol_rank), sys.dim()),
        tol_rank,
    }
}

/// Largest principal angle between `Ker(𝒪Σ_n)` and `Ker(𝒞ᵀ)`. The two
/// subspaces coincide for every system of this class, so the value is a
/// numerical consistency residual (π/2 when even the dimensions differ).
pub fn conjugate_kernel_residual(sys: &QuantumLinearSystem, tol_rank: f64) -> f64 {
    let lhs = conjugate_unobservable_subspace(sys, tol_rank);
    let rhs = uncontrollable_subspace(sys, tol_rank);
    linalg::max_principal_angle(&lhs.basis, &rhs.basis)
}

/// `Ker(𝒪) ∩ Ker(𝒪Σ_n)` as the kernel of the stacked pair. The observable
/// space is represented by an orthonormal basis `Q` of `Range(𝒪ᵀ)`, so the
/// stacked matrix is `(Qᵀ; QᵀΣ_n)`, which has the same kernel as
/// `(𝒪; 𝒪Σ_n)` without the conditioning of raw matrix powers.
pub fn df_subspace(sys: &QuantumLinearSystem, tol_rank: f64) -> Result<KernelBasis> {
    let dim = sys.dim();
    let q = observable_space(sys, tol_rank);
    let basis = if q.ncols() == 0 {
        DMatrix::identity(dim, dim)
    } else {
        let qt = q.transpose();
        let stacked = linalg::vstack(&qt, &(&qt * sys.sigma()));
        linalg::kernel(&stacked, tol_rank)
    };
    if basis.ncols() % 2 != 0 {
        return Err(DflsError::IllConditionedRank(format!(
            "DF intersection has odd dimension {} at tol_rank {tol_rank:.1e}",
            basis.ncols()
        )));
    }
    Ok(KernelBasis { basis, tol_rank })
}

/// Gram-Schmidt step against an orthonormal set, applied twice.
fn orthogonalize(v: &mut DVector<f64>, against: &[DVector<f64>]) {
    for _ in 0..2 {
        for c in against {
            let proj = c.dot(v);
            v.axpy(-proj, c, 1.0);
        }
    }
}

/// Splits a Σ-invariant subspace (orthonormal columns of `k`) into
/// conjugate pairs `(v, Σ_nᵀv)`.
///
/// Each round picks the coordinate axis with the largest projection onto
/// the part of the subspace not yet covered (ties go to the lowest index),
/// which makes the result deterministic and aligned with the coordinate
/// axes whenever the subspace allows it.
fn symplectic_pairing(k: &DMatrix<f64>, sigma_n: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let dim = k.nrows();
    let d = k.ncols();
    if !d.is_multiple_of(2) {
        return Err(DflsError::InvalidDimension(format!(
            "cannot pair an odd-dimensional subspace ({d})"
        )));
    }
    if d == 0 {
        return Ok(DMatrix::zeros(dim, 0));
    }
    let sk = sigma_n * k;
    let invariance = linalg::max_abs(&(&sk - k * (k.transpose() * &sk)));
    if invariance > tol {
        return Err(DflsError::InvarianceViolation {
            residual: invariance,
        });
    }

    let projector = k * k.transpose();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(d);
    for _ in 0..d / 2 {
        let mut rem = projector.clone();
        for c in &cols {
            rem -= c * c.transpose();
        }
        let weights: Vec<f64> = (0..dim).map(|j| rem[(j, j)].max(0.0)).collect();
        let best = weights.iter().copied().fold(0.0_f64, f64::max);
        let j = weights
            .iter()
            .position(|&w| w >= best * (1.0 - 1e-9))
            .expect("nonempty weights");

        let mut v = rem.column(j).into_owned();
        orthogonalize(&mut v, &cols);
        let nv = v.norm();
        if nv <= tol {
            return Err(DflsError::Numerical("subspace deflation lost rank".into()));
        }
        v /= nv;

        let mut w = sigma_n.tr_mul(&v);
        cols.push(v);
        orthogonalize(&mut w, &cols);
        let nw = w.norm();
        if (nw - 1.0).abs() > tol.max(1e-8) {
            return Err(DflsError::InvarianceViolation {
                residual: (nw - 1.0).abs(),
            });
        }
        cols.push(w / nw);
    }
    Ok(columns_to_matrix(dim, &cols))
}

/// Symplectic orthonormal basis `T₁ = (v₁, Σ_nᵀv₁, …, v_ℓ, Σ_nᵀv_ℓ)` of the
/// DF subspace, with `T₁ᵀT₁ = I` and `T₁ᵀΣ_nT₁ = Σ_ℓ`.
pub fn symplectic_df_basis(
    subspace: &KernelBasis,
    sigma: &SymplecticStructure,
    tol: f64,
) -> Result<DMatrix<f64>> {
    if subspace.ambient_dim() != sigma.matrix().nrows() {
        return Err(DflsError::InvalidDimension(format!(
            "subspace lives in R^{}, symplectic form is {}x{}",
            subspace.ambient_dim(),
            sigma.matrix().nrows(),
            sigma.matrix().ncols()
        )));
    }
    symplectic_pairing(&subspace.basis, sigma.matrix(), tol)
}

/// Symplectic orthonormal basis `T₂` of the orthogonal complement of `Range(T₁)`.
pub fn complement_basis(
    t1: &DMatrix<f64>,
    sigma: &SymplecticStructure,
    tol: f64,
) -> Result<DMatrix<f64>> {
    let dim = sigma.matrix().nrows();
    if t1.nrows() != dim {
        return Err(DflsError::InvalidDimension(format!(
            "T1 has {} rows, expected {dim}",
            t1.nrows()
        )));
    }
    let k = linalg::complement(t1, dim);
    symplectic_pairing(&k, sigma.matrix(), tol)
}

/// `G_DF = T₁ᵀGT₁`.
pub fn df_hamiltonian(g: &DMatrix<f64>, t1: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if g.nrows() != t1.nrows() || !g.is_square() {
        return Err(DflsError::InvalidDimension(format!(
            "G is {}x{}, T1 is {}x{}",
            g.nrows(),
            g.ncols(),
            t1.nrows(),
            t1.ncols()
        )));
    }
    Ok(linalg::symmetrize(&(t1.transpose() * g * t1)))
}

/// Residuals of the block structure produced by [`decompose`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockResiduals {
    /// `‖TᵀT − I‖_max`
    pub orthogonality: f64,
    /// `‖TᵀΣ_nT − Σ_ℓ ⊕ Σ_{n−ℓ}‖_max`
    pub symplectic: f64,
    /// `‖CT₁‖_max`
    pub output_leak: f64,
    /// `‖T₁ᵀB‖_max`
    pub input_leak: f64,
    /// `max(‖T₂ᵀAT₁‖, ‖T₁ᵀAT₂‖)`
    pub drift_coupling: f64,
    /// `‖T₁ᵀAT₁ − Σ_ℓG_DF‖_max`
    pub df_drift: f64,
}

impl BlockResiduals {
    pub fn max(&self) -> f64 {
        [
            self.orthogonality,
            self.symplectic,
            self.output_leak,
            self.input_leak,
            self.drift_coupling,
            self.df_drift,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Split of a system into its DF block and the dissipative remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct DfDecomposition {
    /// Number of DF modes ℓ.
    pub ell: usize,
    pub t1: DMatrix<f64>,
    pub t2: DMatrix<f64>,
    pub g_df: DMatrix<f64>,
    /// `Σ_ℓ G_DF`
    pub a1: DMatrix<f64>,
    /// `T₂ᵀAT₂`
    pub a2: DMatrix<f64>,
    /// `T₂ᵀΣ_nᵀCᵀCΣ_nT₂/2`
    pub d2: DMatrix<f64>,
    /// `Σ_{n−ℓ}T₂ᵀCᵀΣ_m`
    pub b2: DMatrix<f64>,
    /// `CT₂`
    pub c2: DMatrix<f64>,
    pub residuals: BlockResiduals,
}

impl DfDecomposition {
    pub fn modes(&self) -> usize {
        self.t1.nrows() / 2
    }

    /// `T = (T₁, T₂)`, mapping DF-ordered coordinates to system coordinates.
    pub fn transform(&self) -> DMatrix<f64> {
        linalg::hstack(&self.t1, &self.t2)
    }

    /// Re-expresses the DF and D blocks in rotated pair bases
    /// `T₁R₁`, `T₂R₂`; both `R` must be orthogonal and symplectic.
    pub fn regauged(
        &self,
        sys: &QuantumLinearSystem,
        r1: &DMatrix<f64>,
        r2: &DMatrix<f64>,
        tol_rank: f64,
    ) -> Result<Self> {
        for (r, name) in [(r1, "DF"), (r2, "D")] {
            let k = r.nrows();
            let orth = linalg::max_abs(&(r.transpose() * r - DMatrix::identity(k, k)));
            let sympl = linalg::max_abs(&(r.transpose() * sigma(k / 2) * r - sigma(k / 2)));
            if orth > 1e-8 || sympl > 1e-8 || !r.is_square() {
                return Err(DflsError::InvalidParameter(format!(
                    "{name} gauge rotation is not orthogonal-symplectic (residuals {orth:.2e}, {sympl:.2e})"
                )));
            }
        }
        build(sys, &self.t1 * r1, &self.t2 * r2, tol_rank)
    }

    /// Rotates `T₁` within its pairs to best match `reference`, a `2n × 2ℓ`
    /// symplectic orthonormal basis of the same subspace.
    pub fn with_df_gauge(
        &self,
        sys: &QuantumLinearSystem,
        reference: &DMatrix<f64>,
        tol_rank: f64,
    ) -> Result<Self> {
        check_same_span(&self.t1, reference)?;
        let r1 = self.t1.transpose() * reference;
        let k = self.t2.ncols();
        self.regauged(sys, &r1, &DMatrix::identity(k, k), tol_rank)
    }

    /// As [`Self::with_df_gauge`] for the dissipative block `T₂`.
    pub fn with_d_gauge(
        &self,
        sys: &QuantumLinearSystem,
        reference: &DMatrix<f64>,
        tol_rank: f64,
    ) -> Result<Self> {
        check_same_span(&self.t2, reference)?;
        let r2 = self.t2.transpose() * reference;
        let k = self.t1.ncols();
        self.regauged(sys, &DMatrix::identity(k, k), &r2, tol_rank)
    }
}

fn check_same_span(basis: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<()> {
    if basis.shape() != reference.shape() {
        return Err(DflsError::InvalidDimension(format!(
            "reference basis is {}x{}, expected {}x{}",
            reference.nrows(),
            reference.ncols(),
            basis.nrows(),
            basis.ncols()
        )));
    }
    let angle = linalg::max_principal_angle(basis, reference);
    if angle > 1e-8 {
        return Err(DflsError::InvalidParameter(format!(
            "reference basis spans a different subspace (angle {angle:.3e})"
        )));
    }
    Ok(())
}

fn build(
    sys: &QuantumLinearSystem,
    t1: DMatrix<f64>,
    t2: DMatrix<f64>,
    tol_rank: f64,
) -> Result<DfDecomposition> {
    let ell = t1.ncols() / 2;
    let n = sys.modes();
    let a = sys.a();
    let g_df = df_hamiltonian(sys.hamiltonian(), &t1)?;
    let a1 = sigma(ell) * &g_df;
    let a2 = t2.transpose() * a * &t2;
    let d2 = linalg::symmetrize(&(t2.transpose() * sys.d() * &t2));
    let b2 = sigma(n - ell) * t2.transpose() * sys.c().transpose() * sigma(sys.fields());
    let c2 = sys.c() * &t2;

    let t = linalg::hstack(&t1, &t2);
    let dim = sys.dim();
    let residuals = BlockResiduals {
        orthogonality: linalg::max_abs(&(t.transpose() * &t - DMatrix::identity(dim, dim))),
        symplectic: linalg::max_abs(
            &(t.transpose() * sys.sigma() * &t - linalg::block_diag(&sigma(ell), &sigma(n - ell))),
        ),
        output_leak: linalg::max_abs(&(sys.c() * &t1)),
        input_leak: linalg::max_abs(&(t1.transpose() * sys.b())),
        drift_coupling: linalg::max_abs(&(t2.transpose() * a * &t1))
            .max(linalg::max_abs(&(t1.transpose() * a * &t2))),
        df_drift: linalg::max_abs(&(t1.transpose() * a * &t1 - &a1)),
    };

    let scale = norm2(a).max(norm2(sys.c())).max(1.0);
    let bound = 100.0 * tol_rank * scale;
    let checks = [
        ("orthogonality", residuals.orthogonality),
        ("symplectic", residuals.symplectic),
        ("C·T1", residuals.output_leak),
        ("T1ᵀ·B", residuals.input_leak),
        ("off-diagonal drift", residuals.drift_coupling),
        ("DF drift", residuals.df_drift),
    ];
    for (what, residual) in checks {
        if residual > bound {
            return Err(DflsError::DecompositionInconsistency {
                what,
                residual,
                bound,
            });
        }
    }

    Ok(DfDecomposition {
        ell,
        t1,
        t2,
        g_df,
        a1,
        a2,
        d2,
        b2,
        c2,
        residuals,
    })
}

/// Builds the DF/D split of `sys`, or `None` when it has no DF subsystem.
/// All block identities are verified before returning.
pub fn decompose(sys: &QuantumLinearSystem, tol_rank: f64) -> Result<Option<DfDecomposition>> {
    let sub = df_subspace(sys, tol_rank)?;
    if sub.is_empty() {
        return Ok(None);
    }
    let structure = SymplecticStructure::new(sys.modes())?;
    let tol = (100.0 * tol_rank).max(1e-10);
    let t1 = symplectic_df_basis(&sub, &structure, tol)?;
    let t2 = complement_basis(&t1, &structure, tol)?;
    build(sys, t1, t2, tol_rank).map(Some)
}

/// Which admissibility test was applied to a candidate Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreservationTest {
    /// `Ker(C) = Ker(CΣ_n)`: `CGT₁ = 0` is necessary and sufficient.
    OutputKernel,
    /// General case: `Range(T₁)` invariant under `G`, sufficient only.
    RangeInvariance,
}

/// Tri-state verdict on whether a Hamiltonian keeps a DF mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preservation {
    /// Preserved, by a necessary-and-sufficient test.
    Certified,
    /// Preserved, by a sufficient test.
    Sufficient,
    /// The applied test failed.
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreservationCheck {
    pub verdict: Preservation,
    pub test: PreservationTest,
    pub residual: f64,
    pub bound: f64,
}

impl PreservationCheck {
    pub fn preserved(&self) -> bool {
        self.verdict != Preservation::Rejected
    }
}

/// Checks whether adding Hamiltonian `g` keeps `T₁ᵀx` a DF mode for output
/// matrix `c`, where `Range(T₁) = Ker(C) ∩ Ker(CΣ_n)` (the `G = 0` analysis).
pub fn hamiltonian_preserves_df(
    g: &DMatrix<f64>,
    t1: &DMatrix<f64>,
    c: &DMatrix<f64>,
    tol: f64,
) -> Result<PreservationCheck> {
    let dim = g.nrows();
    if !g.is_square() || !dim.is_multiple_of(2) || t1.nrows() != dim || c.ncols() != dim {
        return Err(DflsError::InvalidDimension(format!(
            "G {}x{}, T1 {}x{}, C {}x{}",
            g.nrows(),
            g.ncols(),
            t1.nrows(),
            t1.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    let sn = sigma(dim / 2);
    let ker_c = linalg::kernel(c, tol);
    let ker_cs = linalg::kernel(&(c * &sn), tol);
    let exact = linalg::max_principal_angle(&ker_c, &ker_cs) <= 1e-8;

    if exact {
        let residual = norm2(&(c * g * t1));
        let bound = tol * norm2(c) * norm2(g);
        Ok(PreservationCheck {
            verdict: if residual <= bound {
                Preservation::Certified
            } else {
                Preservation::Rejected
            },
            test: PreservationTest::OutputKernel,
            residual,
            bound,
        })
    } else {
        let gt1 = g * t1;
        let residual = norm2(&(&gt1 - t1 * (t1.transpose() * &gt1)));
        let bound = tol * norm2(g);
        Ok(PreservationCheck {
            verdict: if residual <= bound {
                Preservation::Sufficient
            } else {
                Preservation::Rejected
            },
            test: PreservationTest::RangeInvariance,
            residual,
            bound,
        })
    }
}
