use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::spectral::SpectralVectorField;

/// Truncation of the trajectory metrics: windows K_n = [0, n·window] for
/// n = 1..=n_max, with window = (νκ₀²)⁻¹ by default.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    pub window: f64,
    pub viscosity_nu: f64,
}

fn default_n_max() -> usize {
    20
}

impl MetricConfig {
    pub fn new(viscosity_nu: f64, kappa0: f64) -> Self {
        Self {
            n_max: default_n_max(),
            window: 1.0 / (viscosity_nu * kappa0 * kappa0),
            viscosity_nu,
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    /// Span [0, n_max·window] every trajectory must cover.
    pub fn span(&self) -> f64 {
        self.n_max as f64 * self.window
    }

    /// Upper bound on the discarded tail Σ_{n > n_max} 2⁻ⁿ.
    pub fn tail_bound(&self) -> f64 {
        0.5f64.powi(self.n_max as i32)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| {
            Err(Error::Config {
                key: format!("metrics.{key}"),
                message,
            })
        };
        if self.n_max == 0 {
            return bad("n_max", "must be >= 1".into());
        }
        if !(self.window > 0.0 && self.window.is_finite()) {
            return bad("window", format!("must be positive (got {})", self.window));
        }
        if !(self.viscosity_nu > 0.0) {
            return bad("viscosity_nu", format!("must be positive (got {})", self.viscosity_nu));
        }
        Ok(())
    }
}

/// Which norm of the pointwise difference enters the series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Level {
    L2,
    H1,
}

/// Σ_{n=1}^{n_max} 2⁻ⁿ s_n/(scale + s_n), s_n = sup over samples in K_n of
/// the pointwise difference series `diff` sampled every `ds`.
pub fn d_plus_from_series(diff: &[f64], ds: f64, scale: f64, mcfg: &MetricConfig) -> Result<f64> {
    mcfg.validate()?;
    if diff.is_empty() {
        return Err(Error::InvalidArgument("empty difference series".into()));
    }
    let span = (diff.len() - 1) as f64 * ds;
    if span < mcfg.span() * (1.0 - 1e-9) {
        return Err(Error::InsufficientSpan(format!(
            "metric needs span {} but the trajectories cover {span}",
            mcfg.span()
        )));
    }
    let mut sum = 0.0;
    let mut sup = 0.0f64;
    let mut i = 0;
    let mut weight = 1.0;
    for n in 1..=mcfg.n_max {
        let last = ((n as f64 * mcfg.window) / ds + 1e-9).floor() as usize;
        while i <= last.min(diff.len() - 1) {
            sup = sup.max(diff[i]);
            i += 1;
        }
        weight *= 0.5;
        sum += weight * sup / (scale + sup);
    }
    Ok(sum)
}

fn diff_series(a: &[SpectralVectorField], b: &[SpectralVectorField], level: Level, len: usize) -> Result<Vec<f64>> {
    a[..len]
        .iter()
        .zip(&b[..len])
        .map(|(x, y)| {
            let d = x.sub(y)?;
            Ok(match level {
                Level::L2 => d.l2_norm(),
                Level::H1 => d.h1_norm(),
            })
        })
        .collect()
}

/// Samples needed to cover [0, n_max·window].
fn needed(ds: f64, mcfg: &MetricConfig) -> usize {
    (mcfg.span() / ds - 1e-9).ceil() as usize + 1
}

fn d_plus_states(
    a: &[SpectralVectorField],
    b: &[SpectralVectorField],
    ds: f64,
    level: Level,
    mcfg: &MetricConfig,
) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::TimeGrid(format!(
            "metric needs aligned sample lists (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    let len = needed(ds, mcfg).min(a.len());
    let diff = diff_series(a, b, level, len)?;
    let scale = match level {
        Level::L2 => mcfg.viscosity_nu,
        Level::H1 => mcfg.viscosity_nu * a[0].grid().kappa0(),
    };
    d_plus_from_series(&diff, ds, scale, mcfg)
}

/// Truncated d₀⁺: Σ 2⁻ⁿ sup_{K_n}‖u−v‖/(ν + sup_{K_n}‖u−v‖).
pub fn d0_plus(u: &Trajectory, v: &Trajectory, mcfg: &MetricConfig) -> Result<f64> {
    u.check_aligned(v)?;
    d_plus_states(u.states(), v.states(), u.dt_sample(), Level::L2, mcfg)
}

/// Truncated d₁⁺: Σ 2⁻ⁿ sup_{K_n}‖∇(u−v)‖/(νκ₀ + sup_{K_n}‖∇(u−v)‖).
pub fn d1_plus(u: &Trajectory, v: &Trajectory, mcfg: &MetricConfig) -> Result<f64> {
    u.check_aligned(v)?;
    d_plus_states(u.states(), v.states(), u.dt_sample(), Level::H1, mcfg)
}

pub(crate) fn d0_plus_samples(
    a: &[SpectralVectorField],
    b: &[SpectralVectorField],
    ds: f64,
    mcfg: &MetricConfig,
) -> Result<f64> {
    d_plus_states(a, b, ds, Level::L2, mcfg)
}

pub(crate) fn d1_plus_samples(
    a: &[SpectralVectorField],
    b: &[SpectralVectorField],
    ds: f64,
    mcfg: &MetricConfig,
) -> Result<f64> {
    d_plus_states(a, b, ds, Level::H1, mcfg)
}
