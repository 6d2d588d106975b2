use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::diagnostics::DiagnosticsFormat;
use crate::dynamics::{Forcing, SolverConfig};
use crate::error::{Error, Result};
use crate::interpolants::InterpolantKind;
use crate::nudging::{NoiseSpec, NudgingConstants};
use crate::spectral::{EnergySpectrum, TorusGrid, DEFAULT_DEALIAS_FRACTION};

fn default_fraction() -> f64 {
    DEFAULT_DEALIAS_FRACTION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n_modes: usize,
    pub period_l: f64,
    #[serde(default = "default_fraction")]
    pub dealias_fraction: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<TorusGrid> {
        TorusGrid::with_dealias(self.n_modes, self.period_l, self.dealias_fraction).map_err(|e| Error::Config {
            key: "grid".into(),
            message: e.to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForcingConfig {
    Zero,
    /// Random divergence-free forcing on shells [shell_min, shell_max],
    /// scaled to Grashof number `grashof`.
    RandomShells {
        shell_min: u32,
        shell_max: u32,
        grashof: f64,
        seed: u64,
    },
}

impl ForcingConfig {
    pub fn build(&self, grid: &TorusGrid, nu: f64) -> Result<Forcing> {
        match self {
            Self::Zero => Ok(Forcing::zero(grid)),
            Self::RandomShells {
                shell_min,
                shell_max,
                grashof,
                seed,
            } => Forcing::random_shells(grid, *shell_min, *shell_max, *grashof, nu, *seed).map_err(|e| Error::Config {
                key: "forcing".into(),
                message: e.to_string(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Zero,
    TaylorGreen {
        amplitude: f64,
    },
    Random {
        spectrum: EnergySpectrum,
        seed: u64,
        /// Rescaled into ‖∇u₀‖ ≤ radius when given.
        #[serde(default)]
        radius: Option<f64>,
    },
    /// A single-field snapshot file, relative to the config file.
    Snapshot {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_final: f64,
    pub sample_stride: usize,
    /// Spin up into the absorbing ball before recording.
    #[serde(default)]
    pub spin_up: bool,
    #[serde(default)]
    pub spin_up_t_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NudgingSection {
    pub interpolant: InterpolantKind,
    /// None: smallest admissible β from the advisor.
    #[serde(default)]
    pub beta: Option<f64>,
    /// None: the measured ‖v‖_X of the observations.
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub constants: NudgingConstants,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    /// Observations from a stored trajectory (relative to the config file);
    /// otherwise a twin experiment generates the truth.
    #[serde(default)]
    pub reference: Option<PathBuf>,
}

fn default_n_times() -> usize {
    21
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_members: usize,
    pub seed: u64,
    pub spectrum: EnergySpectrum,
    pub radius: f64,
    /// Spin every member up into the absorbing ball.
    #[serde(default = "default_true")]
    pub attractor: bool,
    /// End of the decay time grid; default run.t_final.
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default = "default_n_times")]
    pub n_times: usize,
}

fn default_n_max() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Default (νκ₀²)⁻¹.
    #[serde(default)]
    pub window: Option<f64>,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            n_max: default_n_max(),
            window: None,
        }
    }
}

fn default_formats() -> Vec<DiagnosticsFormat> {
    vec![DiagnosticsFormat::Csv, DiagnosticsFormat::Json]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_true")]
    pub write_snapshots: bool,
    #[serde(default = "default_formats")]
    pub formats: Vec<DiagnosticsFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            write_snapshots: true,
            formats: default_formats(),
        }
    }
}

/// A complete run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub forcing: ForcingConfig,
    pub initial: InitialConfig,
    pub run: RunSection,
    #[serde(default)]
    pub nudging: Option<NudgingSection>,
    #[serde(default)]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub output: OutputConfig,
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

impl RunConfig {
    /// Semantic checks beyond the schema, with key paths.
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        let g = &self.grid;
        if !(g.period_l > 0.0 && g.period_l.is_finite()) {
            return Err(config_err(
                "grid.period_l",
                format!("must be positive (got {})", g.period_l),
            ));
        }
        if g.n_modes < 4 || g.n_modes % 2 != 0 {
            return Err(config_err(
                "grid.n_modes",
                format!("must be even and >= 4 (got {})", g.n_modes),
            ));
        }
        if !(self.run.t_final >= 0.0 && self.run.t_final.is_finite()) {
            return Err(config_err(
                "run.t_final",
                format!("must be non-negative (got {})", self.run.t_final),
            ));
        }
        if self.run.sample_stride == 0 {
            return Err(config_err("run.sample_stride", "must be >= 1"));
        }
        if let Some(n) = &self.nudging {
            if let Some(b) = n.beta {
                if !(b >= 0.0 && b.is_finite()) {
                    return Err(config_err("nudging.beta", format!("must be non-negative (got {b})")));
                }
            }
            if let Some(r) = n.rho {
                if !(r > 0.0) {
                    return Err(config_err("nudging.rho", format!("must be positive (got {r})")));
                }
            }
        }
        if let Some(e) = &self.ensemble {
            if e.n_members == 0 {
                return Err(config_err("ensemble.n_members", "must be >= 1"));
            }
            if !(e.radius > 0.0) {
                return Err(config_err(
                    "ensemble.radius",
                    format!("must be positive (got {})", e.radius),
                ));
            }
            if e.n_times < 2 {
                return Err(config_err("ensemble.n_times", "must be >= 2"));
            }
        }
        if self.metrics.n_max == 0 {
            return Err(config_err("metrics.n_max", "must be >= 1"));
        }
        Ok(())
    }

    /// Parses a JSON value, reporting the dotted key path of schema errors.
    pub fn from_value(v: &Value) -> Result<Self> {
        let cfg: Self = serde_path_to_error::deserialize(v).map_err(|e| {
            let mut key = e.path().to_string();
            let msg = e.inner().to_string();
            if let Some(field) = msg.strip_prefix("missing field `").and_then(|s| s.split('`').next()) {
                key = if key == "." {
                    field.to_string()
                } else {
                    format!("{key}.{field}")
                };
            }
            config_err(&key, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Sets `key` (dotted path) to `value`, parsed as JSON when possible and as
/// a string otherwise. Intermediate objects are created as needed.
pub fn apply_override(doc: &mut Value, key: &str, value: &str) -> Result<()> {
    let parsed = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(key, "malformed override key"));
    }
    let mut cur = doc;
    for (i, p) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| config_err(&parts[..i].join("."), "is not an object"))?;
        if i + 1 == parts.len() {
            obj.insert(p.to_string(), parsed);
            return Ok(());
        }
        cur = obj
            .entry(p.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

/// Parses "key=value".
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| config_err(s, "override must look like key=value"))?;
    Ok((k.trim().to_string(), v.to_string()))
}

/// Reads a config file, applies overrides, and returns it with the resolved
/// JSON document.
pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<(RunConfig, Value)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut doc: Value = serde_json::from_str(&text)?;
    for (k, v) in overrides {
        apply_override(&mut doc, k, v)?;
    }
    let cfg = RunConfig::from_value(&doc)?;
    let resolved = serde_json::to_value(&cfg)?;
    Ok((cfg, resolved))
}
