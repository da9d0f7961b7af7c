//! Run configuration: a JSON document with a `version` field. Unknown keys
//! are rejected everywhere.

use serde::{Deserialize, Serialize};

use cumulant::bath::SpectralKind;
use cumulant::rates::QuadratureConfig;

use crate::CliError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub model: ModelConfig,
    pub bath: BathConfig,
    pub method: Method,
    pub time_grid: TimeGrid,
    #[serde(default = "default_initial_state")]
    pub initial_state: InitialState,
    #[serde(default)]
    pub observables: Option<Vec<[usize; 2]>>,
    #[serde(default)]
    pub grouping: Option<GroupingConfig>,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub witness: Option<WitnessConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    SpinBoson,
    QutritBoson { delta_omega: f64 },
}

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::SpinBoson => "spin_boson",
            ModelConfig::QutritBoson { .. } => "qutrit_boson",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub spectral: String,
    pub alpha: f64,
    #[serde(default)]
    pub omega_c: Option<f64>,
    pub t_eff: f64,
}

impl BathConfig {
    pub fn kind(&self) -> Result<SpectralKind, CliError> {
        SpectralKind::parse(&self.spectral).ok_or_else(|| {
            CliError::Config(format!(
                "bath.spectral: unknown kind `{}`; expected `ohmic`, `ohmic-exponential-cutoff` or `ohmic-sharp-cutoff`",
                self.spectral
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "exact-cutoff")]
    ExactCutoff,
    #[serde(rename = "star")]
    Star,
    #[serde(rename = "doublestar")]
    DoubleStar,
    #[serde(rename = "davies-global")]
    DaviesGlobal,
    #[serde(rename = "davies-local")]
    DaviesLocal,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ExactCutoff => "exact-cutoff",
            Method::Star => "star",
            Method::DoubleStar => "doublestar",
            Method::DaviesGlobal => "davies-global",
            Method::DaviesLocal => "davies-local",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    pub n_points: usize,
    #[serde(default = "default_spacing")]
    pub spacing: Spacing,
    /// First grid point; defaults to 0 for linear grids and `t_max / 1000`
    /// for log grids.
    #[serde(default)]
    pub t_min: Option<f64>,
}

fn default_spacing() -> Spacing {
    Spacing::Linear
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = self.n_points;
        let t_min = self.resolved_t_min();
        let step = |k: usize| k as f64 / (n - 1) as f64;
        match self.spacing {
            Spacing::Linear => (0..n)
                .map(|k| if k == n - 1 { self.t_max } else { t_min + (self.t_max - t_min) * step(k) })
                .collect(),
            Spacing::Log => {
                let (a, b) = (t_min.ln(), self.t_max.ln());
                (0..n)
                    .map(|k| if k == n - 1 { self.t_max } else { (a + (b - a) * step(k)).exp() })
                    .collect()
            }
        }
    }

    pub fn resolved_t_min(&self) -> f64 {
        self.t_min.unwrap_or(match self.spacing {
            Spacing::Linear => 0.0,
            Spacing::Log => self.t_max / 1000.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    /// A named preset of the model, e.g. `"ground"` or `"plus"`.
    Preset(String),
    /// Explicit density matrix, row-major, each entry `[re, im]`.
    Matrix { matrix: Vec<Vec<[f64; 2]>> },
}

fn default_initial_state() -> InitialState {
    InitialState::Preset("ground".into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupingConfig {
    pub gap_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(default = "d_rel")]
    pub rel_tol: f64,
    #[serde(default = "d_abs")]
    pub abs_tol: f64,
    #[serde(default = "d_sub")]
    pub max_subdivisions: usize,
    #[serde(default = "d_tail")]
    pub tail_epsilon: f64,
}

fn d_rel() -> f64 {
    QuadratureConfig::default().rel_tol
}
fn d_abs() -> f64 {
    QuadratureConfig::default().abs_tol
}
fn d_sub() -> usize {
    QuadratureConfig::default().max_subdivisions
}
fn d_tail() -> f64 {
    QuadratureConfig::default().tail_epsilon
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = QuadratureConfig::default();
        Self {
            rel_tol: q.rel_tol,
            abs_tol: q.abs_tol,
            max_subdivisions: q.max_subdivisions,
            tail_epsilon: q.tail_epsilon,
        }
    }
}

impl QuadratureSection {
    pub fn to_config(&self) -> QuadratureConfig {
        QuadratureConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_subdivisions: self.max_subdivisions,
            tail_epsilon: self.tail_epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessConfig {
    pub partner: InitialState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: String,
    #[serde(default = "default_prefix")]
    pub prefix: String,
    /// Report path; defaults to `<dir>/<prefix>_report.json`.
    #[serde(default)]
    pub report: Option<String>,
}

fn default_dir() -> String {
    ".".into()
}

fn default_prefix() -> String {
    "run".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            prefix: default_prefix(),
            report: None,
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = serde_json::from_str(text).map_err(|e| {
        CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    config.validate()?;
    Ok(config)
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.version != CONFIG_VERSION {
            return Err(bad(format!(
                "version: unsupported value {}; this build reads version {CONFIG_VERSION}",
                self.version
            )));
        }
        if let ModelConfig::QutritBoson { delta_omega } = self.model {
            if !(delta_omega > 0.0 && delta_omega < 2.0) {
                return Err(bad(format!("model.delta_omega: must lie in (0, 2), got {delta_omega}")));
            }
        }

        let kind = self.bath.kind()?;
        if !(self.bath.alpha >= 0.0 && self.bath.alpha.is_finite()) {
            return Err(bad(format!("bath.alpha: must be finite and non-negative, got {}", self.bath.alpha)));
        }
        if !(self.bath.t_eff >= 0.0 && self.bath.t_eff.is_finite()) {
            return Err(bad(format!("bath.t_eff: must be finite and non-negative, got {}", self.bath.t_eff)));
        }
        match (kind, self.bath.omega_c) {
            (SpectralKind::Ohmic, Some(_)) => {
                return Err(bad("bath.omega_c: the plain `ohmic` spectral density takes no cut-off"))
            }
            (SpectralKind::Ohmic, None) => {}
            (_, None) => return Err(bad(format!("bath.omega_c: required for `{}`", self.bath.spectral))),
            (_, Some(wc)) if !(wc > 0.0 && wc.is_finite()) => {
                return Err(bad(format!("bath.omega_c: must be positive, got {wc}")))
            }
            _ => {}
        }
        if let ModelConfig::QutritBoson { .. } = self.model {
            if kind != SpectralKind::Ohmic {
                return Err(bad(format!(
                    "model.kind `qutrit_boson` is incompatible with bath.spectral `{}`: the qutrit model uses a plain ohmic bath",
                    self.bath.spectral
                )));
            }
        }
        if self.method == Method::ExactCutoff && kind == SpectralKind::Ohmic {
            return Err(bad(
                "method `exact-cutoff` is incompatible with bath.spectral `ohmic`: the exact integral needs a cut-off",
            ));
        }
        if self.grouping.is_some() && self.method != Method::DaviesLocal {
            return Err(bad(format!(
                "grouping is only used by method `davies-local`, not `{}`",
                self.method.name()
            )));
        }
        if let Some(g) = &self.grouping {
            if !(g.gap_threshold > 0.0 && g.gap_threshold.is_finite()) {
                return Err(bad(format!("grouping.gap_threshold: must be positive, got {}", g.gap_threshold)));
            }
        }

        let grid = &self.time_grid;
        if !(grid.t_max > 0.0 && grid.t_max.is_finite()) {
            return Err(bad(format!("time_grid.t_max: must be positive, got {}", grid.t_max)));
        }
        if grid.n_points < 2 {
            return Err(bad(format!("time_grid.n_points: must be at least 2, got {}", grid.n_points)));
        }
        let t_min = grid.resolved_t_min();
        if !(t_min >= 0.0 && t_min < grid.t_max) {
            return Err(bad(format!("time_grid.t_min: must lie in [0, t_max), got {t_min}")));
        }
        if grid.spacing == Spacing::Log && t_min == 0.0 {
            return Err(bad("time_grid.t_min: log spacing needs t_min > 0"));
        }
        let points = grid.points();
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("time_grid: n_points too large to give distinct times"));
        }

        self.quadrature
            .to_config()
            .validate()
            .map_err(|e| bad(format!("quadrature: {e}")))?;
        if self.output.prefix.is_empty() || self.output.prefix.contains(['/', '\\']) {
            return Err(bad("output.prefix: must be a non-empty file name stem"));
        }
        Ok(())
    }

    pub fn selectors(&self, dim: usize) -> Vec<(usize, usize)> {
        match &self.observables {
            Some(list) => list.iter().map(|&[r, c]| (r, c)).collect(),
            None => (0..dim).flat_map(|r| (r..dim).map(move |c| (r, c))).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": 1,
        "model": {"kind": "spin_boson"},
        "bath": {"spectral": "ohmic", "alpha": 0.05, "t_eff": 1.0},
        "method": "star",
        "time_grid": {"t_max": 50, "n_points": 11}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.quadrature.rel_tol, 1e-8);
        assert_eq!(c.time_grid.spacing, Spacing::Linear);
        assert_eq!(c.initial_state, InitialState::Preset("ground".into()));
        assert_eq!(c.time_grid.points()[10], 50.0);
        assert_eq!(c.selectors(2), vec![(0, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"t_eff\"", "\"alpha_typo\": 1, \"t_eff\"");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("alpha_typo"), "{err}");
        let text = MINIMAL.replace("\"version\": 1,", "\"version\": 1, \"extra\": true,");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn exact_cutoff_needs_a_cutoff_bath() {
        let text = MINIMAL.replace("\"star\"", "\"exact-cutoff\"");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("exact-cutoff") && err.contains("bath.spectral"), "{err}");
    }

    #[test]
    fn log_grid() {
        let text = MINIMAL.replace("\"n_points\": 11", "\"n_points\": 4, \"spacing\": \"log\", \"t_min\": 0.05");
        let c = parse_config(&text).unwrap();
        let p = c.time_grid.points();
        assert!((p[1] / p[0] - p[2] / p[1]).abs() < 1e-12);
        let text = MINIMAL.replace("\"n_points\": 11", "\"n_points\": 4, \"spacing\": \"log\", \"t_min\": 0");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn malformed_documents_report_location() {
        let err = parse_config("{\n  \"version\": 1,\n  oops\n}").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}
