//! Scenario configuration files (TOML) and command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::initial::{hypothesis_shrinking, BumpSpec};
use crate::model::{make_grid, Grid, ModelParams};
use crate::solver::StepControls;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    PmeValidate,
    Shrinking,
    FiniteSpeed,
    ExactSpeed,
    Expanding,
    Decay,
    Ordering,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::PmeValidate => "pme-validate",
            Self::Shrinking => "shrinking",
            Self::FiniteSpeed => "finite-speed",
            Self::ExactSpeed => "exact-speed",
            Self::Expanding => "expanding",
            Self::Decay => "decay",
            Self::Ordering => "ordering",
        }
    }
}

/// Initial attractant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AttractantInit {
    /// Quadratic well of depth set by `bump.mu`, blended to a plateau.
    Aggregating,
    Constant { value: f64 },
    Zero,
}

impl Default for AttractantInit {
    fn default() -> Self {
        Self::Aggregating
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_half_length")]
    pub half_length: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
}

fn default_half_length() -> f64 {
    1.0
}
fn default_cells() -> usize {
    400
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            half_length: default_half_length(),
            cells: default_cells(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    /// Equally spaced samples on `(0, t_end]`, plus `t = 0`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Equally spaced snapshots on `[0, t_end]`; `0` disables them.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    /// Store the full fields at every sample.
    #[serde(default)]
    pub snapshot_every_sample: bool,
    #[serde(default = "default_front_threshold")]
    pub front_threshold: f64,
    /// Normalized pressure band of the fitted front.
    #[serde(default = "default_pressure_band")]
    pub pressure_band: (f64, f64),
}

fn default_samples() -> usize {
    100
}
fn default_snapshots() -> usize {
    5
}
fn default_front_threshold() -> f64 {
    crate::analysis::DEFAULT_REL_THRESHOLD
}
fn default_pressure_band() -> (f64, f64) {
    crate::analysis::DEFAULT_PRESSURE_BAND
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            snapshots: default_snapshots(),
            snapshot_every_sample: false,
            front_threshold: default_front_threshold(),
            pressure_band: default_pressure_band(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Horizon of the initial-speed fit; defaults to `t_end`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_horizon: Option<f64>,
    #[serde(default = "default_speed_windows")]
    pub speed_windows: usize,
    /// Relative tolerance of the speed comparison.
    #[serde(default = "default_speed_rel_tol")]
    pub speed_rel_tol: f64,
    /// Absolute tolerance of the speed comparison.
    #[serde(default = "default_speed_abs_tol")]
    pub speed_abs_tol: f64,
    /// Decay fits end at the first sample below `noise_floor × ε_mach × ū`.
    #[serde(default = "default_noise_floor")]
    pub noise_floor: f64,
    #[serde(default = "default_min_r_squared")]
    pub min_r_squared: f64,
    /// Required `‖∇v(t_end)‖_∞ / ‖∇v₀‖_∞`.
    #[serde(default = "default_gradient_reduction")]
    pub gradient_reduction: f64,
}

fn default_speed_windows() -> usize {
    4
}
fn default_speed_rel_tol() -> f64 {
    0.15
}
fn default_speed_abs_tol() -> f64 {
    0.08
}
fn default_noise_floor() -> f64 {
    1e4
}
fn default_min_r_squared() -> f64 {
    0.95
}
fn default_gradient_reduction() -> f64 {
    1e-3
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            fit_horizon: None,
            speed_windows: default_speed_windows(),
            speed_rel_tol: default_speed_rel_tol(),
            speed_abs_tol: default_speed_abs_tol(),
            noise_floor: default_noise_floor(),
            min_r_squared: default_min_r_squared(),
            gradient_reduction: default_gradient_reduction(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    /// Offset `β± = β ± gap` of the exact-speed pair.
    #[serde(default = "default_gap")]
    pub gap: f64,
    /// Envelope radius of the finite-speed certificate; defaults to
    /// `R₀ + (L − |x₀| − R₀)/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_envelope: Option<f64>,
    /// Upper cap on the drift budget `δ` of the expanding certificate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_request: Option<f64>,
    /// Run the shrinking scenario even when the hypothesis fails.
    #[serde(default)]
    pub allow_subthreshold: bool,
}

fn default_gap() -> f64 {
    0.1
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            gap: default_gap(),
            r_envelope: None,
            delta_request: None,
            allow_subthreshold: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmeConfig {
    /// The Barenblatt solution is started at `t_offset`.
    #[serde(default)]
    pub t_offset: f64,
    #[serde(default = "default_resolutions")]
    pub resolutions: Vec<usize>,
    #[serde(default = "default_max_linf_error")]
    pub max_linf_error: f64,
    #[serde(default = "default_min_order")]
    pub min_order: f64,
}

fn default_resolutions() -> Vec<usize> {
    vec![200, 400, 800]
}
fn default_max_linf_error() -> f64 {
    2e-2
}
fn default_min_order() -> f64 {
    0.8
}

impl Default for PmeConfig {
    fn default() -> Self {
        Self {
            t_offset: 0.0,
            resolutions: default_resolutions(),
            max_linf_error: default_max_linf_error(),
            min_order: default_min_order(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderingConfig {
    /// The lower bump has amplitude `amplitude_scale · K₀`.
    #[serde(default = "default_amplitude_scale")]
    pub amplitude_scale: f64,
    /// The lower bump has radius `radius_scale · R₀`.
    #[serde(default = "default_radius_scale")]
    pub radius_scale: f64,
    #[serde(default = "default_ordering_tol")]
    pub tolerance: f64,
}

fn default_amplitude_scale() -> f64 {
    0.5
}
fn default_radius_scale() -> f64 {
    0.8
}
fn default_ordering_tol() -> f64 {
    1e-10
}

impl Default for OrderingConfig {
    fn default() -> Self {
        Self {
            amplitude_scale: default_amplitude_scale(),
            radius_scale: default_radius_scale(),
            tolerance: default_ordering_tol(),
        }
    }
}

/// A complete scenario description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub model: ModelParams,
    pub bump: BumpSpec,
    #[serde(default)]
    pub attractant: AttractantInit,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub controls: StepControls,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub certificate: CertificateConfig,
    #[serde(default)]
    pub pme: PmeConfig,
    #[serde(default)]
    pub ordering: OrderingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::from_table(value)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    /// Applies `key=value` overrides with dotted keys, e.g. `bump.mu=4`.
    /// Values are parsed as TOML (numbers, booleans, arrays) and fall back
    /// to strings.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        for (key, raw) in overrides {
            set_dotted(&mut table, key, parse_value(raw))?;
        }
        Self::from_table(table)
    }

    pub fn make_grid(&self) -> Result<Grid> {
        make_grid(self.model.dim, self.model.radial, self.grid.half_length, self.grid.cells)
    }

    /// Checks everything that can be checked before running.
    pub fn validate(&self) -> Result<()> {
        let bad = |s: String| Err(Error::Config(s));
        self.model.validate()?;
        self.controls.validate(0.0)?;
        let grid = self.make_grid()?;
        if self.scenario != ScenarioKind::PmeValidate {
            self.bump.validate_on(&self.model, &grid)?;
        }
        if self.sampling.samples == 0 {
            return bad("sampling.samples must be at least 1".into());
        }
        let (lo, hi) = self.sampling.pressure_band;
        if !(lo > 0.0 && lo < hi && hi <= 1.0) {
            return bad(format!("sampling.pressure_band {:?} must satisfy 0 < lo < hi <= 1", (lo, hi)));
        }
        if !(self.sampling.front_threshold > 0.0 && self.sampling.front_threshold < 1.0) {
            return bad("sampling.front_threshold must lie in (0, 1)".into());
        }
        if let Some(h) = self.analysis.fit_horizon {
            if !(h > 0.0 && h <= self.controls.t_end) {
                return bad(format!("analysis.fit_horizon = {h} must lie in (0, t_end]"));
            }
        }
        if let AttractantInit::Constant { value } = self.attractant {
            if !(value >= 0.0 && value.is_finite()) {
                return bad(format!("attractant value {value} must be finite and >= 0"));
            }
        }
        match self.scenario {
            ScenarioKind::ExactSpeed => {
                if (self.bump.d0 - self.model.d()).abs() > 1e-12 * self.model.d() {
                    return bad(format!(
                        "exact-speed requires bump.d0 = 1/(m-1) = {}, got {}",
                        self.model.d(),
                        self.bump.d0
                    ));
                }
                if self.attractant != AttractantInit::Aggregating {
                    return bad("exact-speed requires the aggregating attractant".into());
                }
                if !(self.certificate.gap > 0.0) {
                    return bad("certificate.gap must be positive".into());
                }
            }
            ScenarioKind::Shrinking => {
                if self.attractant != AttractantInit::Aggregating {
                    return bad("shrinking requires the aggregating attractant".into());
                }
                let (ok, margin) = hypothesis_shrinking(&self.model, &self.bump);
                if !ok && !self.certificate.allow_subthreshold {
                    return bad(format!(
                        "shrinking hypothesis fails (margin {margin}); set certificate.allow_subthreshold to run anyway"
                    ));
                }
            }
            ScenarioKind::FiniteSpeed => {
                let r_env = self.r_envelope();
                if !(r_env > self.bump.r0 && r_env + self.bump.x0.abs() <= self.grid.half_length) {
                    return bad(format!(
                        "envelope radius {r_env} must exceed R0 and the envelope must fit in the domain"
                    ));
                }
            }
            ScenarioKind::Expanding | ScenarioKind::Decay => {
                if self.model.dim != 1 || self.model.radial {
                    return bad("expanding and decay scenarios run on the 1D interval".into());
                }
            }
            ScenarioKind::PmeValidate => {
                if self.pme.resolutions.len() < 2 {
                    return bad("pme.resolutions needs at least two entries".into());
                }
                if self.pme.resolutions.iter().any(|&n| n < 4) {
                    return bad("pme.resolutions entries must be at least 4".into());
                }
                if !(self.pme.t_offset >= 0.0) {
                    return bad("pme.t_offset must be >= 0".into());
                }
            }
            ScenarioKind::Ordering => {
                let o = &self.ordering;
                if !(o.amplitude_scale > 0.0 && o.amplitude_scale <= 1.0 && o.radius_scale > 0.0 && o.radius_scale <= 1.0) {
                    return bad("ordering scales must lie in (0, 1]".into());
                }
            }
        }
        Ok(())
    }

    pub fn r_envelope(&self) -> f64 {
        self.certificate.r_envelope.unwrap_or_else(|| {
            let room = self.grid.half_length - self.bump.x0.abs() - self.bump.r0;
            self.bump.r0 + room / 2.0
        })
    }

    /// Horizon of the initial-speed fit.
    pub fn fit_horizon(&self) -> f64 {
        self.analysis.fit_horizon.unwrap_or(self.controls.t_end)
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key `{key}`")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not a table")))?;
    }
    let last = parts[parts.len() - 1];
    // Integers given for float fields are accepted by serde; keep the
    // original type when a float is replaced by an integer literal.
    let value = match (cur.get(last), value) {
        (Some(toml::Value::Float(_)), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
        (_, v) => v,
    };
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Parses `key=v1,v2,...` into the key and its values.
pub fn parse_sweep_param(spec: &str) -> Result<(String, Vec<String>)> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("sweep parameter `{spec}` must look like key=v1,v2")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("sweep parameter `{spec}` has an empty key")));
    }
    let values: Vec<String> = values
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    Ok((key.to_string(), values))
}
