//! Dense linear-algebra helpers shared by the analysis modules.
//!
//! Everything here works on `DMatrix<f64>` and treats empty matrices as
//! legitimate values (zero-dimensional subspaces show up routinely when a
//! system has no decoherence-free part, or no dissipative part).
//!
//! Singular value and eigenvalue decompositions go through `faer`; the
//! nalgebra SVD loses accuracy on some rank-deficient inputs, which would
//! corrupt every rank decision downstream.

use faer::{Mat, MatRef, Side};
use nalgebra::{Complex, DMatrix, DVector};

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin or full SVD as `(U, σ, V)` with `σ` in descending order.
fn svd(m: &DMatrix<f64>, thin: bool) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let a = to_faer(m);
    let dec = if thin { a.thin_svd() } else { a.svd() }.expect("SVD did not converge");
    let s = dec.S().column_vector().iter().copied().collect();
    (from_faer(dec.U()), s, from_faer(dec.V()))
}

/// Symmetric eigendecomposition `(λ ascending, eigenvectors)`.
fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let dec = to_faer(&symmetrize(m))
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric eigendecomposition did not converge");
    let values = dec.S().column_vector().iter().copied().collect();
    (values, from_faer(dec.U()))
}

/// Largest absolute entry; zero for an empty matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    to_faer(m).singular_values().expect("SVD did not converge")
}

/// Spectral norm (largest singular value); zero for an empty matrix.
pub fn norm2(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Numerical rank with singular values above `tol * sigma_max` counted as nonzero.
pub fn rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let s = singular_values(m);
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax).count()
}

/// Full right-singular basis of `m` together with the singular value attached
/// to each right singular vector (zero for the directions beyond the row count).
fn full_right_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let ncols = m.ncols();
    // Zero rows do not change the right singular vectors, but make the
    // decomposition square so the full V factor is returned.
    let rows = m.nrows().max(ncols);
    let mut padded = DMatrix::<f64>::zeros(rows, ncols);
    padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
    let (_, s, v) = svd(&padded, false);
    (v, s)
}

/// Orthonormal basis of the numerical kernel of `m`: right singular vectors
/// with `sigma <= tol * sigma_max` (`sigma_max` taken as 1 when `m == 0`).
pub fn kernel(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let ncols = m.ncols();
    if ncols == 0 {
        return DMatrix::zeros(0, 0);
    }
    if m.nrows() == 0 {
        return DMatrix::identity(ncols, ncols);
    }
    let (v, s) = full_right_svd(m);
    let smax = s.iter().copied().fold(0.0_f64, f64::max);
    let scale = if smax > 0.0 { smax } else { 1.0 };
    let cols: Vec<DVector<f64>> = s
        .iter()
        .enumerate()
        .filter(|(_, &sv)| sv <= tol * scale)
        .map(|(j, _)| v.column(j).into_owned())
        .collect();
    columns_to_matrix(ncols, &cols)
}

/// Orthonormal basis of the column space of `m`, dropping directions with
/// `sigma <= tol * sigma_max`.
pub fn range(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    range_abs(m, tol * norm2(m))
}

/// Orthonormal basis of the column space keeping singular values above an
/// absolute threshold.
pub fn range_abs(m: &DMatrix<f64>, threshold: f64) -> DMatrix<f64> {
    let nrows = m.nrows();
    if m.is_empty() {
        return DMatrix::zeros(nrows, 0);
    }
    let (u, s, _) = svd(m, true);
    let cols: Vec<DVector<f64>> = s
        .iter()
        .enumerate()
        .filter(|(_, &sv)| sv > threshold)
        .map(|(j, _)| u.column(j).into_owned())
        .collect();
    columns_to_matrix(nrows, &cols)
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns of `q` in `R^dim`.
pub fn complement(q: &DMatrix<f64>, dim: usize) -> DMatrix<f64> {
    if q.ncols() == 0 {
        return DMatrix::identity(dim, dim);
    }
    kernel(&q.transpose(), 1e-8)
}

pub fn columns_to_matrix(nrows: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(nrows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Horizontal concatenation `(a, b)`.
pub fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows(), "hstack row mismatch");
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    out
}

/// Vertical concatenation `(a; b)`.
pub fn vstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), b.ncols(), "vstack column mismatch");
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    out
}

/// Block-diagonal `a ⊕ b`.
pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest principal angle between two subspaces given by orthonormal
/// columns. Computed from the sine (`‖(I - UUᵀ)V‖₂`) so that tiny angles are
/// resolved to machine precision. Subspaces of different dimension are at
/// angle π/2.
pub fn max_principal_angle(u: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    if u.ncols() != v.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    if u.ncols() == 0 {
        return 0.0;
    }
    let residual = v - u * (u.transpose() * v);
    norm2(&residual).min(1.0).asin()
}

/// Eigenvalues of a general real square matrix, sorted by real part then imaginary part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev = to_faer(m)
        .eigenvalues()
        .expect("eigenvalue iteration did not converge");
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    ev
}

/// Largest real part of the spectrum; `-inf` for an empty matrix.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m)
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Ascending eigenvalues of a symmetric matrix (the input is symmetrized first).
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    symmetric_eigen(m).0
}

/// Smallest eigenvalue of the Hermitian matrix `re + i·im` (`re` symmetric,
/// `im` antisymmetric), through the real embedding `[[re, -im], [im, re]]`.
pub fn hermitian_min_eigenvalue(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    let top = hstack(re, &(-im));
    let bottom = hstack(im, re);
    symmetric_eigenvalues(&vstack(&top, &bottom))
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// Column-major vectorization.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<f64>, nrows: usize, ncols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(nrows, ncols, v.as_slice())
}

/// Kronecker sum generator `I ⊗ a + a ⊗ I`, acting on column-major `vec(V)`
/// as `vec(aV + Vaᵀ)`.
pub fn lyapunov_generator(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    id.kronecker(a) + a.kronecker(&id)
}

/// Matrix square root of a symmetric positive semidefinite matrix.
pub fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return m.clone();
    }
    let (values, vectors) = symmetric_eigen(m);
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|x| x.max(0.0).sqrt()),
    ));
    &vectors * d * vectors.transpose()
}
