//! Linear open quantum systems described by a quadratic Hamiltonian matrix
//! `G` and linear coupling vectors `c_i`.
//!
//! The canonical coordinate order is interleaved, `x = (q₁, p₁, …, q_n, p_n)`.
//! Inputs written in the grouped order `(q₁, …, q_n, p₁, …, p_n)` are
//! converted with [`ModeBasisPermutation`].

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{DflsError, Result};
use crate::linalg;

/// Default absolute tolerance on the asymmetry of `G`.
pub const DEFAULT_TOL_SYM: f64 = 1e-12;

/// Block-diagonal symplectic form `Σ_n = diag(Σ, …, Σ)` with `Σ = [[0, 1], [-1, 0]]`.
pub fn symplectic_form(n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(DflsError::InvalidDimension(
            "symplectic form needs at least one mode".into(),
        ));
    }
    Ok(sigma(n))
}

/// `Σ_n` without the `n ≥ 1` check; `sigma(0)` is the empty matrix.
pub(crate) fn sigma(n: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        s[(2 * k, 2 * k + 1)] = 1.0;
        s[(2 * k + 1, 2 * k)] = -1.0;
    }
    s
}

/// The symplectic form of an `n`-mode phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticStructure {
    n: usize,
    sigma: DMatrix<f64>,
}

impl SymplecticStructure {
    pub fn new(n: usize) -> Result<Self> {
        Ok(Self {
            n,
            sigma: symplectic_form(n)?,
        })
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Applies `Σ_nᵀ` to a phase-space vector, i.e. `(q, p) ↦ (-p, q)` per mode.
    pub fn conjugate(&self, v: &DVector<f64>) -> DVector<f64> {
        self.sigma.tr_mul(v)
    }
}

/// Outcome of a symplecticity test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticCheck {
    pub symplectic: bool,
    pub residual: f64,
}

/// Tests `TᵀΣ_nT = Σ_k` for a `2n × 2k` matrix `T`.
pub fn is_symplectic(t: &DMatrix<f64>, tol: f64) -> Result<SymplecticCheck> {
    if !t.nrows().is_multiple_of(2) || !t.ncols().is_multiple_of(2) {
        return Err(DflsError::InvalidDimension(format!(
            "symplectic test needs even dimensions, got {}x{}",
            t.nrows(),
            t.ncols()
        )));
    }
    if t.ncols() > t.nrows() {
        return Err(DflsError::InvalidDimension(format!(
            "{} columns exceed {} rows",
            t.ncols(),
            t.nrows()
        )));
    }
    let lhs = t.transpose() * sigma(t.nrows() / 2) * t;
    let residual = linalg::max_abs(&(lhs - sigma(t.ncols() / 2)));
    Ok(SymplecticCheck {
        symplectic: residual <= tol,
        residual,
    })
}

/// Real coefficient matrices `(A, B, C, D)` of the linear QSDE and moment equations.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

/// Matrix data `(n, m, G, {c_i})` of a linear open quantum system with the
/// derived drift, input, output and diffusion matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumLinearSystem {
    n: usize,
    m: usize,
    g: DMatrix<f64>,
    couplings: Vec<DVector<Complex<f64>>>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl QuantumLinearSystem {
    /// Assembles the system from `G` and the coupling vectors. `G` is
    /// symmetrized when its asymmetry is within `tol_sym`.
    pub fn assemble(
        n: usize,
        g: DMatrix<f64>,
        couplings: Vec<DVector<Complex<f64>>>,
        tol_sym: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(DflsError::InvalidDimension("system needs n >= 1".into()));
        }
        let dim = 2 * n;
        if g.shape() != (dim, dim) {
            return Err(DflsError::InvalidDimension(format!(
                "G is {}x{}, expected {dim}x{dim}",
                g.nrows(),
                g.ncols()
            )));
        }
        if let Some(i) = couplings.iter().position(|c| c.len() != dim) {
            return Err(DflsError::InvalidDimension(format!(
                "coupling {i} has length {}, expected {dim}",
                couplings[i].len()
            )));
        }
        if g.iter().any(|x| !x.is_finite())
            || couplings.iter().flat_map(|c| c.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(DflsError::InvalidParameter("non-finite system data".into()));
        }
        let asym = linalg::max_abs(&(&g - g.transpose()));
        if asym > tol_sym {
            return Err(DflsError::InvalidHamiltonian(format!(
                "G asymmetry {asym:.3e} exceeds tolerance {tol_sym:.3e}"
            )));
        }
        let g = linalg::symmetrize(&g);
        let m = couplings.len();

        let mut c = DMatrix::zeros(2 * m, dim);
        for (i, ci) in couplings.iter().enumerate() {
            for j in 0..dim {
                c[(2 * i, j)] = std::f64::consts::SQRT_2 * ci[j].re;
                c[(2 * i + 1, j)] = std::f64::consts::SQRT_2 * ci[j].im;
            }
        }
        let sn = sigma(n);
        let sm = sigma(m);
        let a = &sn * (&g + c.transpose() * &sm * &c * 0.5);
        let b = &sn * c.transpose() * &sm;
        let d = linalg::symmetrize(&(sn.transpose() * c.transpose() * &c * &sn * 0.5));

        Ok(Self {
            n,
            m,
            g,
            couplings,
            a,
            b,
            c,
            d,
        })
    }

    /// Same coupling vectors with a different Hamiltonian matrix.
    pub fn with_hamiltonian(&self, g: DMatrix<f64>) -> Result<Self> {
        Self::assemble(self.n, g, self.couplings.clone(), DEFAULT_TOL_SYM)
    }

    /// The system in coordinates `x = S x'` for a square symplectic `S`:
    /// `G' = SᵀGS`, `c' = Sᵀc`, hence `A' = S⁻¹AS`.
    pub fn transformed(&self, s: &DMatrix<f64>) -> Result<Self> {
        let dim = 2 * self.n;
        if s.shape() != (dim, dim) {
            return Err(DflsError::InvalidDimension(format!(
                "transform is {}x{}, expected {dim}x{dim}",
                s.nrows(),
                s.ncols()
            )));
        }
        let g = linalg::symmetrize(&(s.transpose() * &self.g * s));
        let st = s.map(|x| Complex::new(x, 0.0)).transpose();
        let couplings = self.couplings.iter().map(|c| &st * c).collect();
        Self::assemble(self.n, g, couplings, f64::INFINITY)
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn fields(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn hamiltonian(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn couplings(&self) -> &[DVector<Complex<f64>>] {
        &self.couplings
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn sigma(&self) -> DMatrix<f64> {
        sigma(self.n)
    }

    pub fn matrices(&self) -> SystemMatrices {
        SystemMatrices {
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
        }
    }
}

/// Returns `(A, B, C, D)`.
pub fn system_matrices(sys: &QuantumLinearSystem) -> SystemMatrices {
    sys.matrices()
}

/// Reordering between grouped `(q₁…q_n, p₁…p_n)` and interleaved
/// `(q₁, p₁, …, q_n, p_n)` coordinates.
///
/// `order[i]` is the grouped index of interleaved coordinate `i`; the
/// permutation matrix `P` has `P[order[i], i] = 1`, so `x_grouped = P x_interleaved`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeBasisPermutation {
    n: usize,
    order: Vec<usize>,
}

impl ModeBasisPermutation {
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn modes(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let dim = 2 * self.n;
        let mut p = DMatrix::zeros(dim, dim);
        for (i, &g) in self.order.iter().enumerate() {
            p[(g, i)] = 1.0;
        }
        p
    }

    /// Converts a matrix acting on grouped coordinates (quadratic form or
    /// covariance) to interleaved coordinates: `PᵀMP`.
    pub fn to_interleaved(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(self.order[i], self.order[j])])
    }

    /// Inverse of [`Self::to_interleaved`].
    pub fn to_grouped(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(self.order[i], self.order[j])] = m[(i, j)];
            }
        }
        out
    }

    pub fn vector_to_interleaved<T: nalgebra::Scalar + Copy>(&self, v: &DVector<T>) -> DVector<T> {
        DVector::from_fn(v.len(), |i, _| v[self.order[i]])
    }

    pub fn vector_to_grouped<T: nalgebra::Scalar + Copy + Default>(
        &self,
        v: &DVector<T>,
    ) -> DVector<T> {
        let mut out = DVector::from_element(v.len(), T::default());
        for (i, &g) in self.order.iter().enumerate() {
            out[g] = v[i];
        }
        out
    }
}

/// Permutation from grouped to interleaved ordering for `n` modes.
pub fn basis_permutation(n: usize) -> Result<ModeBasisPermutation> {
    if n == 0 {
        return Err(DflsError::InvalidDimension(
            "basis permutation needs n >= 1".into(),
        ));
    }
    let order = (0..2 * n)
        .map(|i| if i % 2 == 0 { i / 2 } else { n + i / 2 })
        .collect();
    Ok(ModeBasisPermutation { n, order })
}
