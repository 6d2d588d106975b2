use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::interpolants::{apply_j, InterpolantOp};
use crate::spectral::{random_vector_field, EnergySpectrum, SpectralVectorField, TorusGrid};

/// Additive per-sample noise: a seeded random mean-zero field with flat
/// shell energies over the dealiased band, scaled to L² norm `magnitude`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub magnitude: f64,
    pub seed: u64,
}

/// Uniformly sampled observation data v(t₀ + i·dt_sample).
#[derive(Clone, Debug)]
pub struct ObservationStream {
    grid: TorusGrid,
    t0: f64,
    dt_sample: f64,
    values: Vec<SpectralVectorField>,
    noise: Option<NoiseSpec>,
    sup_grad: f64,
}

impl ObservationStream {
    pub fn new(
        grid: &TorusGrid,
        t0: f64,
        dt_sample: f64,
        values: Vec<SpectralVectorField>,
        noise: Option<NoiseSpec>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("observation stream is empty".into()));
        }
        if !(dt_sample > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dt_sample must be positive (got {dt_sample})"
            )));
        }
        for v in &values {
            grid.check_same(v.grid())?;
        }
        let sup_grad = values.iter().map(|v| v.h1_norm()).fold(0.0, f64::max);
        Ok(Self {
            grid: grid.clone(),
            t0,
            dt_sample,
            values,
            noise,
            sup_grad,
        })
    }

    pub fn zeros(grid: &TorusGrid, t0: f64, dt_sample: f64, n: usize) -> Result<Self> {
        Self::new(grid, t0, dt_sample, vec![SpectralVectorField::zeros(grid); n], None)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt_sample(&self) -> f64 {
        self.dt_sample
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[SpectralVectorField] {
        &self.values
    }

    pub fn noise(&self) -> Option<NoiseSpec> {
        self.noise
    }

    pub fn span(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt_sample
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.span()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt_sample
    }

    /// sup over samples of ‖∇v‖.
    pub fn sup_grad(&self) -> f64 {
        self.sup_grad
    }

    /// ‖v‖_X = sup ‖∇v‖/(νκ₀) over the samples.
    pub fn x_norm(&self, nu: f64) -> f64 {
        self.sup_grad / (nu * self.grid.kappa0())
    }

    fn map_pair(
        &self,
        other: &Self,
        f: impl Fn(&SpectralVectorField, &SpectralVectorField) -> Result<SpectralVectorField>,
    ) -> Result<Self> {
        self.check_aligned(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&self.grid, self.t0, self.dt_sample, values, self.noise)
    }

    /// a·self + b·other.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.map_pair(other, |x, y| x.lincomb(a, y, b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.map_pair(other, |x, y| x.sub(y))
    }

    pub fn scale(&self, s: f64) -> Self {
        let values = self.values.iter().map(|v| v.scale(s)).collect();
        Self {
            values,
            sup_grad: self.sup_grad * s.abs(),
            ..self.clone()
        }
    }

    /// Samples `from..` relabelled to start at `t0`.
    pub fn tail_from(&self, from: usize, t0: f64) -> Result<Self> {
        if from >= self.len() {
            return Err(Error::InsufficientSpan(format!(
                "cannot drop {from} of {} samples",
                self.len()
            )));
        }
        Self::new(&self.grid, t0, self.dt_sample, self.values[from..].to_vec(), self.noise)
    }

    /// Shift (τ_σ v)(t) = v(t + σ): drops the first σ/dt_sample samples,
    /// keeping the `t0` label.
    pub fn shift(&self, sigma: f64) -> Result<Self> {
        let k = sample_offset(sigma, self.dt_sample)?;
        self.tail_from(k, self.t0)
    }

    pub(crate) fn check_aligned(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.len() != other.len()
            || (self.dt_sample - other.dt_sample).abs() > 1e-12 * self.dt_sample
            || (self.t0 - other.t0).abs() > 1e-9 * self.dt_sample.max(1.0)
        {
            return Err(Error::TimeGrid("observation streams are not aligned".into()));
        }
        Ok(())
    }
}

pub(crate) fn sample_offset(sigma: f64, dt_sample: f64) -> Result<usize> {
    let x = sigma / dt_sample;
    let k = x.round();
    if k < 0.0 || (x - k).abs() > 1e-9 * x.abs().max(1.0) {
        return Err(Error::TimeGrid(format!(
            "shift {sigma} is not a non-negative multiple of dt_sample = {dt_sample}"
        )));
    }
    Ok(k as usize)
}

/// v(t) = J(u(t)) on the trajectory's sample grid, plus optional noise.
pub fn observe(u_traj: &Trajectory, op: &InterpolantOp, noise: Option<NoiseSpec>) -> Result<ObservationStream> {
    op.grid().check_same(u_traj.grid())?;
    let grid = u_traj.grid();
    let spectrum = EnergySpectrum::power_law(1.0, 0.0, 1, grid.dealias_cutoff() as u32);
    let values = u_traj
        .states()
        .par_iter()
        .enumerate()
        .map(|(i, u)| {
            let mut v = apply_j(op, u)?;
            if let Some(n) = noise {
                if n.magnitude > 0.0 {
                    let e = random_vector_field(grid, &spectrum, n.seed.wrapping_add(i as u64))?;
                    v = v.add(&e.scale(n.magnitude / e.l2_norm()))?;
                }
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    ObservationStream::new(grid, u_traj.t0(), u_traj.dt_sample(), values, noise)
}
