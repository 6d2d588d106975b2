use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Norms, SpectralVectorField, TorusGrid};

/// Uniformly sampled solution path. Sample i sits at time `t0 + i·dt_sample`.
///
/// Time-shifts keep the `t0` label: a shifted path (τ_σ u)(t) = u(t + σ)
/// is stored with its own first sample at `t0`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: TorusGrid,
    t0: f64,
    dt_sample: f64,
    states: Vec<SpectralVectorField>,
}

/// Per-sample norm table of a trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NormSeries {
    pub t: Vec<f64>,
    pub norms: Vec<Norms>,
}

impl Trajectory {
    pub fn new(grid: &TorusGrid, t0: f64, dt_sample: f64, states: Vec<SpectralVectorField>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument("trajectory needs at least one state".into()));
        }
        if !(dt_sample > 0.0 && dt_sample.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dt_sample must be positive (got {dt_sample})"
            )));
        }
        for s in &states {
            grid.check_same(s.grid())?;
        }
        Ok(Self {
            grid: grid.clone(),
            t0,
            dt_sample,
            states,
        })
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
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[SpectralVectorField] {
        &self.states
    }

    pub fn into_states(self) -> Vec<SpectralVectorField> {
        self.states
    }

    pub fn state(&self, i: usize) -> &SpectralVectorField {
        &self.states[i]
    }

    pub fn first(&self) -> &SpectralVectorField {
        &self.states[0]
    }

    pub fn last(&self) -> &SpectralVectorField {
        self.states.last().expect("non-empty")
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt_sample
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Stored span (last − first sample time).
    pub fn span(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt_sample
    }

    /// Sample index for an offset `s` from the first sample; `s` must be
    /// a multiple of `dt_sample` within 1e-9 relative.
    pub fn offset_index(&self, s: f64) -> Result<usize> {
        let x = s / self.dt_sample;
        let i = x.round();
        if i < 0.0 || (x - i).abs() > 1e-9 * x.abs().max(1.0) {
            return Err(Error::TimeGrid(format!(
                "offset {s} is not a non-negative multiple of dt_sample = {}",
                self.dt_sample
            )));
        }
        let i = i as usize;
        if i >= self.len() {
            return Err(Error::InsufficientSpan(format!(
                "offset {s} lies beyond the stored span {}",
                self.span()
            )));
        }
        Ok(i)
    }

    /// Samples `from..to` as a new trajectory relabelled to start at `t0`.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self> {
        if from >= to || to > self.len() {
            return Err(Error::InvalidArgument(format!(
                "bad slice {from}..{to} of {} samples",
                self.len()
            )));
        }
        Ok(Self {
            grid: self.grid.clone(),
            t0: self.t0,
            dt_sample: self.dt_sample,
            states: self.states[from..to].to_vec(),
        })
    }

    /// Every `k`-th sample.
    pub fn subsample(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("subsample stride must be >= 1".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            t0: self.t0,
            dt_sample: self.dt_sample * k as f64,
            states: self.states.iter().step_by(k).cloned().collect(),
        })
    }

    pub(crate) fn check_aligned(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        let rel = (self.dt_sample - other.dt_sample).abs() / self.dt_sample;
        if rel > 1e-12 || self.len() != other.len() || (self.t0 - other.t0).abs() > 1e-9 * self.dt_sample.max(1.0) {
            return Err(Error::TimeGrid(format!(
                "misaligned trajectories: (t0={}, dt={}, n={}) vs (t0={}, dt={}, n={})",
                self.t0,
                self.dt_sample,
                self.len(),
                other.t0,
                other.dt_sample,
                other.len()
            )));
        }
        Ok(())
    }

    /// Samplewise difference self − other.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_aligned(other)?;
        let states = self
            .states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: self.grid.clone(),
            t0: self.t0,
            dt_sample: self.dt_sample,
            states,
        })
    }

    pub fn norm_series(&self) -> NormSeries {
        NormSeries {
            t: self.times(),
            norms: self.states.iter().map(|u| u.norms()).collect(),
        }
    }
}
