//! Analysis reports in structured (JSON) and human-readable form.

use std::fmt::Write as _;

use dfls::{DfDecomposition, PreservationCheck, StabilityReport};
use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

/// Row-major dense matrix. JSON numbers use shortest round-trip formatting,
/// so values survive a write/read cycle bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&DMatrix<f64>> for Matrix {
    fn from(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

impl Matrix {
    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

fn pairs(values: &[Complex<f64>]) -> Vec<[f64; 2]> {
    values.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub stable: bool,
    pub marginal: bool,
    pub worst_pair_real: Option<f64>,
    pub a2_hurwitz: bool,
    pub gdf_psd: bool,
    pub shortcut_used: bool,
    pub shortcut_agrees: bool,
}

impl From<&StabilityReport> for StabilitySummary {
    fn from(r: &StabilityReport) -> Self {
        Self {
            stable: r.stable,
            marginal: r.marginal,
            worst_pair_real: r.worst_pair_real.is_finite().then_some(r.worst_pair_real),
            a2_hurwitz: r.a2_hurwitz,
            gdf_psd: r.gdf_psd,
            shortcut_used: r.shortcut_used,
            shortcut_agrees: r.shortcut_agrees,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub orthogonality: f64,
    pub symplectic: f64,
    pub output_leak: f64,
    pub input_leak: f64,
    pub drift_coupling: f64,
    pub df_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub verdict: String,
    pub test: String,
    pub residual: f64,
    pub bound: f64,
}

impl From<&PreservationCheck> for CandidateSummary {
    fn from(c: &PreservationCheck) -> Self {
        Self {
            verdict: format!("{:?}", c.verdict).to_lowercase(),
            test: match c.test {
                dfls::PreservationTest::OutputKernel => "output-kernel".into(),
                dfls::PreservationTest::RangeInvariance => "range-invariance".into(),
            },
            residual: c.residual,
            bound: c.bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub modes: usize,
    pub fields: usize,
    /// Number ℓ of DF modes; the DF subspace has dimension 2ℓ.
    pub df_modes: usize,
    pub t1: Matrix,
    pub t2: Matrix,
    pub g_df: Matrix,
    pub g_df_eigenvalues: Vec<f64>,
    pub a1_eigenvalues: Vec<[f64; 2]>,
    pub a2_eigenvalues: Vec<[f64; 2]>,
    pub stability: Option<StabilitySummary>,
    /// Largest principal angle between `Ker(𝒪Σ)` and `Ker(𝒞ᵀ)`.
    pub conjugate_kernel_residual: f64,
    pub residuals: Option<Residuals>,
    pub candidate: Option<CandidateSummary>,
    pub tol_rank: f64,
    pub tol_margin: f64,
}

impl AnalysisReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        modes: usize,
        fields: usize,
        decomposition: Option<&DfDecomposition>,
        stability: Option<&StabilityReport>,
        conjugate_kernel_residual: f64,
        candidate: Option<&PreservationCheck>,
        tol_rank: f64,
        tol_margin: f64,
    ) -> Self {
        let dim = 2 * modes;
        let empty = DMatrix::zeros(dim, 0);
        let (t1, t2, g_df) = match decomposition {
            Some(d) => (Matrix::from(&d.t1), Matrix::from(&d.t2), Matrix::from(&d.g_df)),
            None => (
                Matrix::from(&empty),
                Matrix::from(&DMatrix::identity(dim, dim)),
                Matrix::from(&DMatrix::zeros(0, 0)),
            ),
        };
        Self {
            modes,
            fields,
            df_modes: decomposition.map_or(0, |d| d.ell),
            t1,
            t2,
            g_df,
            g_df_eigenvalues: decomposition
                .map(|d| dfls::linalg::symmetric_eigenvalues(&d.g_df))
                .unwrap_or_default(),
            a1_eigenvalues: stability.map(|s| pairs(&s.eig_a1)).unwrap_or_default(),
            a2_eigenvalues: stability.map(|s| pairs(&s.eig_a2)).unwrap_or_default(),
            stability: stability.map(StabilitySummary::from),
            conjugate_kernel_residual,
            residuals: decomposition.map(|d| Residuals {
                orthogonality: d.residuals.orthogonality,
                symplectic: d.residuals.symplectic,
                output_leak: d.residuals.output_leak,
                input_leak: d.residuals.input_leak,
                drift_coupling: d.residuals.drift_coupling,
                df_drift: d.residuals.df_drift,
            }),
            candidate: candidate.map(CandidateSummary::from),
            tol_rank,
            tol_margin,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "modes: {}  fields: {}", self.modes, self.fields);
        let _ = writeln!(
            out,
            "DF modes: {} (subspace dimension {})",
            self.df_modes,
            2 * self.df_modes
        );
        let _ = writeln!(
            out,
            "Ker(OΣ) vs Ker(Cᵀ) principal angle: {}",
            num(self.conjugate_kernel_residual)
        );
        if self.df_modes == 0 {
            let _ = writeln!(out, "no DF subsystem");
        } else {
            write_matrix(&mut out, "T1", &self.t1);
            write_matrix(&mut out, "T2", &self.t2);
            write_matrix(&mut out, "G_DF", &self.g_df);
            let _ = writeln!(out, "G_DF eigenvalues: {}", list(&self.g_df_eigenvalues));
            let _ = writeln!(out, "A1 eigenvalues: {}", complex_list(&self.a1_eigenvalues));
            let _ = writeln!(out, "A2 eigenvalues: {}", complex_list(&self.a2_eigenvalues));
        }
        if let Some(s) = &self.stability {
            out.push_str(&stability_text(s));
        }
        if let Some(r) = &self.residuals {
            let _ = writeln!(
                out,
                "residuals: orthogonality {}  symplectic {}  C·T1 {}  T1ᵀ·B {}  drift coupling {}  DF drift {}",
                num(r.orthogonality),
                num(r.symplectic),
                num(r.output_leak),
                num(r.input_leak),
                num(r.drift_coupling),
                num(r.df_drift)
            );
        }
        if let Some(c) = &self.candidate {
            let _ = writeln!(
                out,
                "candidate G: {} ({} test, residual {} vs bound {})",
                c.verdict,
                c.test,
                num(c.residual),
                num(c.bound)
            );
        }
        out
    }
}

pub fn stability_text(s: &StabilitySummary) -> String {
    let verdict = if s.stable {
        "stable"
    } else if s.marginal {
        "not stable (marginal)"
    } else {
        "not stable"
    };
    let worst = s.worst_pair_real.map_or("n/a".to_string(), num);
    format!(
        "stability: {verdict}; worst pair real part {worst}; A2 Hurwitz {}; G_DF ⪰ 0 {}{}\n",
        s.a2_hurwitz,
        s.gdf_psd,
        if s.shortcut_used {
            format!("; shortcut agrees {}", s.shortcut_agrees)
        } else {
            String::new()
        }
    )
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn list(values: &[f64]) -> String {
    values.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", ")
}

fn complex_list(values: &[[f64; 2]]) -> String {
    values
        .iter()
        .map(|[re, im]| format!("{} {} {}i", num(*re), if *im < 0.0 { "-" } else { "+" }, num(im.abs())))
        .collect::<Vec<_>>()
        .join(", ")
}

fn write_matrix(out: &mut String, name: &str, m: &Matrix) {
    let _ = writeln!(out, "{name} ({}x{}):", m.rows, m.cols);
    for row in m.data.chunks(m.cols.max(1)).take(m.rows) {
        let _ = writeln!(out, "  [{}]", list(row));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_is_row_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = Matrix::from(&m);
        assert_eq!(r.data, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(r.to_dmatrix(), m);
    }

    #[test]
    fn awkward_floats_round_trip() {
        let values = [0.1 + 0.2, 1.0 / 3.0, 5e-324, 1.7976931348623157e308, -2.2250738585072014e-308];
        let m = Matrix {
            rows: 1,
            cols: values.len(),
            data: values.to_vec(),
        };
        let back: Matrix = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        for (a, b) in m.data.iter().zip(&back.data) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
