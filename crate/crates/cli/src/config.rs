//! Run configuration documents (JSON).
//!
//! ```json
//! {
//!   "scenario": { "kind": "dissipative-pair",
//!                 "params": { "kappa": 2, "G1": "zeros", "G2": "zeros" } },
//!   "tolerances": { "tol_rank": 1e-9 },
//!   "time_grid": { "t_end": 10, "steps": 100 },
//!   "initial_state": { "tms": { "r": 1 } }
//! }
//! ```
//!
//! Matrices are row-major, either as nested rows or as one flat array;
//! complex vectors are arrays of `[re, im]` pairs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use dfls::scenarios::{self, Scenario};
use dfls::{basis_permutation, linalg, QuantumLinearSystem};
use nalgebra::{Complex, DMatrix, DVector};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawMatrix {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawParam {
    Number(f64),
    Matrix(RawMatrix),
    Named(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Interleaved,
    Grouped,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    n: usize,
    m: usize,
    #[serde(rename = "G")]
    g: RawMatrix,
    couplings: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    basis: Basis,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    kind: String,
    #[serde(default)]
    params: BTreeMap<String, RawParam>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    tol_rank: Option<f64>,
    tol_margin: Option<f64>,
    tol_psd: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum RawInitial {
    Vacuum,
    Tms { r: f64 },
    Explicit { mean: Vec<f64>, cov: RawMatrix },
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_end: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|k| self.t_end * k as f64 / self.steps as f64)
            .collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: Option<RawSystem>,
    scenario: Option<RawScenario>,
    #[serde(rename = "candidate_G")]
    candidate_g: Option<RawMatrix>,
    #[serde(default)]
    candidate_basis: Basis,
    #[serde(default)]
    tolerances: RawTolerances,
    time_grid: Option<TimeGrid>,
    initial_state: Option<RawInitial>,
    #[serde(default)]
    output: OutputPaths,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub tol_rank: f64,
    pub tol_margin: f64,
    pub tol_psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_rank: dfls::DEFAULT_TOL_RANK,
            tol_margin: dfls::DEFAULT_TOL_MARGIN,
            tol_psd: dfls::DEFAULT_TOL_PSD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Vacuum,
    TwoModeSqueezed { r: f64 },
    Explicit { mean: DVector<f64>, cov: DMatrix<f64> },
}

/// A scenario parameter: a scalar or a 2×2 block.
#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Scalar(f64),
    Block(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: String,
    pub params: BTreeMap<String, Param>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    System(QuantumLinearSystem),
    Scenario(ScenarioSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: Source,
    pub candidate_g: Option<DMatrix<f64>>,
    pub tolerances: Tolerances,
    pub time_grid: Option<TimeGrid>,
    pub initial_state: InitialState,
    pub output: OutputPaths,
}

impl RunConfig {
    /// The system the run operates on. Scenarios missing parameters that
    /// only the engineering solver can supply fail here.
    pub fn system(&self) -> Result<QuantumLinearSystem, CliError> {
        match &self.source {
            Source::System(sys) => Ok(sys.clone()),
            Source::Scenario(spec) => Ok(spec.to_scenario()?.build()?),
        }
    }

    pub fn scenario(&self) -> Option<&ScenarioSpec> {
        match &self.source {
            Source::Scenario(spec) => Some(spec),
            Source::System(_) => None,
        }
    }
}

fn required_keys(kind: &str) -> &'static [&'static str] {
    match kind {
        "dissipative-pair" | "dispersive-pair" => &["kappa", "G1", "G2"],
        "optomech" => &["m", "omega", "gamma", "kappa"],
        "optomech-extended" => &["m", "omega", "gamma", "kappa", "g", "mu", "nu"],
        "ring-trap" => &["omega", "omega_prime", "k", "k2", "k3", "kappa"],
        _ => &[],
    }
}

/// Parameters the `engineer` command solves for, hence optional in the document.
pub fn solved_keys(kind: &str) -> &'static [&'static str] {
    match kind {
        "optomech-extended" => &["mu", "nu"],
        "ring-trap" => &["omega_prime", "k2", "k3"],
        _ => &[],
    }
}

impl ScenarioSpec {
    pub fn scalar(&self, key: &str) -> Result<f64, CliError> {
        match self.params.get(key) {
            Some(Param::Scalar(x)) => Ok(*x),
            Some(Param::Block(_)) => Err(CliError::Validation(format!(
                "scenario.params.{key}: expected a number"
            ))),
            None => Err(CliError::Validation(format!(
                "scenario.params.{key}: missing for kind {}",
                self.kind
            ))),
        }
    }

    fn block(&self, key: &str) -> Result<DMatrix<f64>, CliError> {
        match self.params.get(key) {
            Some(Param::Block(b)) => Ok(b.clone()),
            Some(Param::Scalar(_)) => Err(CliError::Validation(format!(
                "scenario.params.{key}: expected a 2x2 matrix"
            ))),
            None => Err(CliError::Validation(format!(
                "scenario.params.{key}: missing for kind {}",
                self.kind
            ))),
        }
    }

    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let s = |key| self.scalar(key);
        Ok(match self.kind.as_str() {
            "dissipative-pair" => Scenario::DissipativePair {
                kappa: s("kappa")?,
                g1: self.block("G1")?,
                g2: self.block("G2")?,
            },
            "dispersive-pair" => Scenario::DispersivePair {
                kappa: s("kappa")?,
                g1: self.block("G1")?,
                g2: self.block("G2")?,
            },
            "optomech" => Scenario::Optomech {
                m: s("m")?,
                omega: s("omega")?,
                gamma: s("gamma")?,
                kappa: s("kappa")?,
            },
            "optomech-extended" => Scenario::OptomechExtended {
                m: s("m")?,
                omega: s("omega")?,
                gamma: s("gamma")?,
                kappa: s("kappa")?,
                g: s("g")?,
                mu: s("mu")?,
                nu: s("nu")?,
            },
            "ring-trap" => Scenario::RingTrap {
                omega: s("omega")?,
                omega_prime: s("omega_prime")?,
                k: s("k")?,
                k2: s("k2")?,
                k3: s("k3")?,
                kappa: s("kappa")?,
            },
            other => {
                return Err(CliError::Validation(format!(
                    "scenario.kind: unknown kind {other:?}"
                )))
            }
        })
    }
}

fn matrix(raw: RawMatrix, rows: usize, cols: usize, at: &str) -> Result<DMatrix<f64>, CliError> {
    match raw {
        RawMatrix::Rows(r) => {
            if r.len() != rows {
                return Err(CliError::Parse(format!(
                    "{at}: expected {rows} rows, found {}",
                    r.len()
                )));
            }
            if let Some(i) = r.iter().position(|row| row.len() != cols) {
                return Err(CliError::Parse(format!(
                    "{at}[{i}]: expected {cols} columns, found {}",
                    r[i].len()
                )));
            }
            Ok(DMatrix::from_fn(rows, cols, |i, j| r[i][j]))
        }
        RawMatrix::Flat(v) => {
            if v.len() != rows * cols {
                return Err(CliError::Parse(format!(
                    "{at}: expected {} entries ({rows}x{cols} row-major), found {}",
                    rows * cols,
                    v.len()
                )));
            }
            Ok(DMatrix::from_row_slice(rows, cols, &v))
        }
    }
}

fn check_tolerance(name: &str, value: Option<f64>, default: f64) -> Result<f64, CliError> {
    let v = value.unwrap_or(default);
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(CliError::Validation(format!(
            "tolerances.{name}: must lie in (0, 1), got {v}"
        )))
    }
}

fn build_system(raw: RawSystem) -> Result<QuantumLinearSystem, CliError> {
    if raw.n == 0 {
        return Err(CliError::Validation("system.n: must be at least 1".into()));
    }
    let dim = 2 * raw.n;
    if raw.couplings.len() != raw.m {
        return Err(CliError::Parse(format!(
            "system.couplings: m = {} but {} coupling vectors given",
            raw.m,
            raw.couplings.len()
        )));
    }
    let mut g = matrix(raw.g, dim, dim, "system.G")?;
    let mut couplings = Vec::with_capacity(raw.m);
    for (i, c) in raw.couplings.iter().enumerate() {
        if c.len() != dim {
            return Err(CliError::Parse(format!(
                "system.couplings[{i}]: expected {dim} entries, found {}",
                c.len()
            )));
        }
        couplings.push(DVector::from_iterator(
            dim,
            c.iter().map(|&[re, im]| Complex::new(re, im)),
        ));
    }
    if raw.basis == Basis::Grouped {
        let perm = basis_permutation(raw.n)?;
        g = perm.to_interleaved(&g);
        couplings = couplings.iter().map(|c| perm.vector_to_interleaved(c)).collect();
    }
    Ok(QuantumLinearSystem::assemble(
        raw.n,
        g,
        couplings,
        1e-12,
    )?)
}

fn build_scenario(raw: RawScenario) -> Result<ScenarioSpec, CliError> {
    if !Scenario::KINDS.contains(&raw.kind.as_str()) {
        return Err(CliError::Validation(format!(
            "scenario.kind: unknown kind {:?}; expected one of {}",
            raw.kind,
            Scenario::KINDS.join(", ")
        )));
    }
    let required = required_keys(&raw.kind);
    let mut params = BTreeMap::new();
    for (key, value) in raw.params {
        let at = format!("scenario.params.{key}");
        if !required.contains(&key.as_str()) {
            return Err(CliError::Parse(format!(
                "{at}: not a parameter of kind {}",
                raw.kind
            )));
        }
        let is_block = key == "G1" || key == "G2";
        let param = match (value, is_block) {
            (RawParam::Number(x), false) => Param::Scalar(x),
            (RawParam::Named(name), true) => match name.as_str() {
                "zeros" => Param::Block(DMatrix::zeros(2, 2)),
                "identity" => Param::Block(DMatrix::identity(2, 2)),
                other => {
                    return Err(CliError::Parse(format!(
                        "{at}: unknown matrix name {other:?}"
                    )))
                }
            },
            (RawParam::Matrix(m), true) => Param::Block(matrix(m, 2, 2, &at)?),
            (_, true) => return Err(CliError::Parse(format!("{at}: expected a 2x2 matrix"))),
            (_, false) => return Err(CliError::Parse(format!("{at}: expected a number"))),
        };
        params.insert(key, param);
    }
    let optional = solved_keys(&raw.kind);
    if let Some(missing) = required
        .iter()
        .find(|k| !params.contains_key(**k) && !optional.contains(k))
    {
        return Err(CliError::Parse(format!(
            "scenario.params.{missing}: required for kind {}",
            raw.kind
        )));
    }
    let spec = ScenarioSpec {
        kind: raw.kind,
        params,
    };
    // Physical constraints are checked as soon as the parameter set is complete.
    if optional.iter().all(|k| spec.params.contains_key(*k)) {
        spec.to_scenario()?.build()?;
    } else {
        validate_engineering_inputs(&spec)?;
    }
    Ok(spec)
}

fn validate_engineering_inputs(spec: &ScenarioSpec) -> Result<(), CliError> {
    match spec.kind.as_str() {
        "optomech-extended" => {
            scenarios::optomech(
                spec.scalar("m")?,
                spec.scalar("omega")?,
                spec.scalar("gamma")?,
                spec.scalar("kappa")?,
            )?;
        }
        "ring-trap" => {
            let omega = spec.scalar("omega")?;
            let k = spec.scalar("k")?;
            scenarios::ring_trap(omega, omega, k, 0.0, 0.0, spec.scalar("kappa")?)?;
        }
        _ => {}
    }
    Ok(())
}

fn build_initial(raw: Option<RawInitial>, n: Option<usize>) -> Result<InitialState, CliError> {
    Ok(match raw {
        None | Some(RawInitial::Vacuum) => InitialState::Vacuum,
        Some(RawInitial::Tms { r }) => {
            if !r.is_finite() {
                return Err(CliError::Validation("initial_state.tms.r: must be finite".into()));
            }
            if n.is_some_and(|n| n != 2) {
                return Err(CliError::Validation(
                    "initial_state.tms: needs a two-mode system".into(),
                ));
            }
            InitialState::TwoModeSqueezed { r }
        }
        Some(RawInitial::Explicit { mean, cov }) => {
            let dim = mean.len();
            if n.is_some_and(|n| 2 * n != dim) {
                return Err(CliError::Parse(format!(
                    "initial_state.explicit.mean: expected {} entries, found {dim}",
                    2 * n.unwrap_or(0)
                )));
            }
            let cov = matrix(cov, dim, dim, "initial_state.explicit.cov")?;
            if linalg::max_abs(&(&cov - cov.transpose())) > 1e-12 * linalg::max_abs(&cov).max(1.0) {
                return Err(CliError::Validation(
                    "initial_state.explicit.cov: not symmetric".into(),
                ));
            }
            InitialState::Explicit {
                mean: DVector::from_vec(mean),
                cov,
            }
        }
    })
}

/// Parses and validates a configuration document.
pub fn parse_config(document: &str) -> Result<RunConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Parse(format!("{path}: {}", e.into_inner()))
    })?;

    let source = match (raw.system, raw.scenario) {
        (Some(sys), None) => Source::System(build_system(sys)?),
        (None, Some(sc)) => Source::Scenario(build_scenario(sc)?),
        (Some(_), Some(_)) => {
            return Err(CliError::Parse(
                "exactly one of `system` and `scenario` may be given".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Parse(
                "one of `system` or `scenario` is required".into(),
            ))
        }
    };
    let n = match &source {
        Source::System(sys) => Some(sys.modes()),
        Source::Scenario(spec) => match spec.kind.as_str() {
            "ring-trap" | "optomech-extended" => Some(3),
            _ => Some(2),
        },
    };

    let candidate_g = match raw.candidate_g {
        None => None,
        Some(m) => {
            let dim = 2 * n.unwrap_or(0);
            let g = matrix(m, dim, dim, "candidate_G")?;
            if linalg::max_abs(&(&g - g.transpose())) > 1e-12 {
                return Err(CliError::Validation("candidate_G: not symmetric".into()));
            }
            Some(match raw.candidate_basis {
                Basis::Interleaved => g,
                Basis::Grouped => basis_permutation(dim / 2)?.to_interleaved(&g),
            })
        }
    };

    let tolerances = Tolerances {
        tol_rank: check_tolerance("tol_rank", raw.tolerances.tol_rank, dfls::DEFAULT_TOL_RANK)?,
        tol_margin: check_tolerance("tol_margin", raw.tolerances.tol_margin, dfls::DEFAULT_TOL_MARGIN)?,
        tol_psd: check_tolerance("tol_psd", raw.tolerances.tol_psd, dfls::DEFAULT_TOL_PSD)?,
    };

    if let Some(grid) = &raw.time_grid {
        if !(grid.t_end > 0.0 && grid.t_end.is_finite()) || grid.steps == 0 {
            return Err(CliError::Validation(
                "time_grid: t_end must be positive and steps at least 1".into(),
            ));
        }
    }

    Ok(RunConfig {
        source,
        candidate_g,
        tolerances,
        time_grid: raw.time_grid,
        initial_state: build_initial(raw.initial_state, n)?,
        output: raw.output,
    })
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}
