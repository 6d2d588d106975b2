use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{d0_plus_samples, d1_plus_samples, MetricConfig};
use super::transport::{transport, TransportResult};
use crate::dynamics::{
    absorbing_bounds, integrate_from, spin_up_to_absorbing, Forcing, SolverConfig, SpinUpOptions, Trajectory,
};
use crate::error::{Error, Result};
use crate::interpolants::InterpolantOp;
use crate::nudging::{observe, solve_wplus, twin_run, NudgingConfig};
use crate::spectral::{random_divfree_field, rescale_h1, EnergySpectrum, SpectralVectorField, TorusGrid};

/// How a measure was produced.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    InitialSample,
    PushforwardS,
    PushforwardWj,
    /// Atomwise observation J(u) of a trajectory measure.
    Observed,
    /// Shifted by the accumulated time.
    Shifted(f64),
}

/// Equal-weight empirical measure on trajectories. All atoms share the
/// grid and the sample grid.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    atoms: Vec<Trajectory>,
    provenance: Provenance,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<Trajectory>, provenance: Provenance) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empirical measure needs at least one atom".into()))?;
        for (i, a) in atoms.iter().enumerate().skip(1) {
            first.check_aligned(a).map_err(|e| Error::member(i, e))?;
        }
        Ok(Self { atoms, provenance })
    }

    /// Dirac atoms at single states.
    pub fn from_states(states: Vec<SpectralVectorField>, t0: f64) -> Result<Self> {
        let grid = states
            .first()
            .ok_or_else(|| Error::InvalidArgument("empirical measure needs at least one atom".into()))?
            .grid()
            .clone();
        let atoms = states
            .into_iter()
            .map(|s| Trajectory::new(&grid, t0, 1.0, vec![s]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(atoms, Provenance::InitialSample)
    }

    pub fn atoms(&self) -> &[Trajectory] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Trajectory {
        &self.atoms[i]
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn grid(&self) -> &TorusGrid {
        self.atoms[0].grid()
    }

    pub fn dt_sample(&self) -> f64 {
        self.atoms[0].dt_sample()
    }

    pub fn n_samples(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn span(&self) -> f64 {
        self.atoms[0].span()
    }

    pub fn t0(&self) -> f64 {
        self.atoms[0].t0()
    }
}

/// Initial-measure families.
#[derive(Clone, Debug)]
pub enum InitialKind<'a> {
    /// Random divergence-free fields with the given shell spectrum,
    /// rescaled into the ball ‖∇u₀‖ ≤ radius when they fall outside.
    GaussianModes { spectrum: EnergySpectrum, radius: f64 },
    /// Gaussian-mode samples each spun up into the absorbing ball.
    AttractorAtoms {
        spectrum: EnergySpectrum,
        radius: f64,
        forcing: &'a Forcing,
        solver: &'a SolverConfig,
        spin_up: SpinUpOptions,
    },
}

/// Independent member seeds derived from one master seed.
pub fn member_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

pub fn sample_initial_measure(
    grid: &TorusGrid,
    kind: &InitialKind<'_>,
    n: usize,
    seed: u64,
) -> Result<Vec<SpectralVectorField>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let (spectrum, radius) = match kind {
        InitialKind::GaussianModes { spectrum, radius } | InitialKind::AttractorAtoms { spectrum, radius, .. } => {
            (spectrum, *radius)
        }
    };
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "ball radius must be positive (got {radius})"
        )));
    }
    member_seeds(seed, n)
        .into_par_iter()
        .enumerate()
        .map(|(i, s)| {
            let u = random_divfree_field(grid, spectrum, s).map_err(|e| Error::member(i, e))?;
            let u = if u.h1_norm() > radius {
                rescale_h1(&u, radius)
            } else {
                u
            };
            match kind {
                InitialKind::GaussianModes { .. } => Ok(u),
                InitialKind::AttractorAtoms {
                    forcing,
                    solver,
                    spin_up,
                    ..
                } => {
                    let g = forcing.grashof(solver.viscosity_nu);
                    spin_up_to_absorbing(&u, forcing, solver, g, spin_up)
                        .map(|s| s.state)
                        .map_err(|e| Error::member(i, e))
                }
            }
        })
        .collect()
}

/// Atom i = S(·)init[i] on [t0, t0 + t_final], sampled every `stride` steps.
pub fn push_forward_s(
    init: &[SpectralVectorField],
    f: &Forcing,
    cfg: &SolverConfig,
    t0: f64,
    t_final: f64,
    stride: usize,
) -> Result<EmpiricalMeasure> {
    let atoms = init
        .par_iter()
        .enumerate()
        .map(|(i, u)| integrate_from(u, t0, f, cfg, t_final, stride).map_err(|e| Error::member(i, e)))
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::new(atoms, Provenance::PushforwardS)
}

fn warn_if_outside_absorbing(mu: &EmpiricalMeasure, f: &Forcing, cfg: &SolverConfig) {
    let nu = cfg.viscosity_nu;
    let k0 = mu.grid().kappa0();
    let bound = absorbing_bounds(f.grashof(nu), nu, k0, 1.0).h1_bound;
    for (i, a) in mu.atoms().iter().enumerate() {
        let sup = a.states().iter().map(|u| u.h1_norm()).fold(0.0, f64::max);
        if sup > bound * (1.0 + 1e-9) {
            log::warn!("atom {i} leaves the absorbing ball: sup |grad u| = {sup:.4} > {bound:.4}");
        }
    }
}

/// Atomwise J: each atom's observation samples as a trajectory.
pub fn observe_measure(mu: &EmpiricalMeasure, op: &InterpolantOp) -> Result<EmpiricalMeasure> {
    let atoms = mu
        .atoms()
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let v = observe(a, op, None).map_err(|e| Error::member(i, e))?;
            Trajectory::new(a.grid(), a.t0(), a.dt_sample(), v.values().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::new(atoms, Provenance::Observed)
}

/// (W₊ ∘ 𝒥)μ from the sampled atoms: each atom is observed and W₊ is solved
/// against the time-interpolated stream. Member order is preserved.
pub fn push_forward_wj(
    mu: &EmpiricalMeasure,
    op: &InterpolantOp,
    f: &Forcing,
    cfg: &SolverConfig,
    ncfg: &NudgingConfig,
) -> Result<EmpiricalMeasure> {
    warn_if_outside_absorbing(mu, f, cfg);
    let atoms = mu
        .atoms()
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            {
                let v = observe(a, op, None)?;
                solve_wplus(&v, f, cfg, ncfg)
            }
            .map_err(|e| Error::member(i, e))
        })
        .collect::<Result<Vec<_>>>()?;
    EmpiricalMeasure::new(atoms, Provenance::PushforwardWj)
}

/// Relative H¹ agreement required between a stored atom and its lockstep
/// re-integration.
pub const LOCKSTEP_TOLERANCE: f64 = 1e-10;

/// Truth and nudged measures from a lockstep twin per atom.
#[derive(Clone, Debug)]
pub struct LockstepPushForward {
    /// Re-integrated truth (agrees with the input atoms to
    /// [`LOCKSTEP_TOLERANCE`]).
    pub truth: EmpiricalMeasure,
    pub nudged: EmpiricalMeasure,
}

/// (W₊ ∘ 𝒥)μ for atoms that are solutions under `cfg`: each atom's truth is
/// re-integrated from its first state together with the nudged solution,
/// so the observation is exact at every stage. `w0` gives per-member
/// nudged initial data (zero when None, which is W₊).
pub fn push_forward_wj_lockstep(
    mu: &EmpiricalMeasure,
    f: &Forcing,
    cfg: &SolverConfig,
    ncfg: &NudgingConfig,
    w0: Option<&[SpectralVectorField]>,
) -> Result<LockstepPushForward> {
    warn_if_outside_absorbing(mu, f, cfg);
    if let Some(w) = w0 {
        if w.len() != mu.n_atoms() {
            return Err(Error::InvalidArgument(format!(
                "{} nudged initial states for {} atoms",
                w.len(),
                mu.n_atoms()
            )));
        }
    }
    let x = mu.dt_sample() / cfg.dt;
    let stride = x.round();
    if stride < 1.0 || (x - stride).abs() > 1e-9 * x {
        return Err(Error::TimeGrid(format!(
            "sample spacing {} is not a multiple of dt = {}",
            mu.dt_sample(),
            cfg.dt
        )));
    }
    let zero = SpectralVectorField::zeros(mu.grid());
    let pairs = mu
        .atoms()
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let w = w0.map_or(&zero, |w| &w[i]);
            let run = twin_run(a.first(), w, a.t0(), a.span(), stride as usize, f, cfg, ncfg)
                .map_err(|e| Error::member(i, e))?;
            for (k, (x, y)) in run.truth.states().iter().zip(a.states()).enumerate() {
                let scale = y.h1_norm().max(f64::MIN_POSITIVE);
                let d = x.sub(y)?.h1_norm();
                if d > LOCKSTEP_TOLERANCE * scale {
                    return Err(Error::member(
                        i,
                        Error::InvalidArgument(format!(
                            "atom is not a solution under the solver configuration \
                             (relative H1 mismatch {:.3e} at sample {k})",
                            d / scale
                        )),
                    ));
                }
            }
            Ok((run.truth, run.nudged))
        })
        .collect::<Result<Vec<_>>>()?;
    let (truth, nudged): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(LockstepPushForward {
        truth: EmpiricalMeasure::new(truth, mu.provenance())?,
        nudged: EmpiricalMeasure::new(nudged, Provenance::PushforwardWj)?,
    })
}

/// Atomwise τ_t (shift by t; must be a multiple of dt_sample inside the span).
pub fn shift_measure(mu: &EmpiricalMeasure, t: f64) -> Result<EmpiricalMeasure> {
    let k = mu.atoms[0].offset_index(t)?;
    if k == 0 {
        return Ok(mu.clone());
    }
    let atoms = mu
        .atoms()
        .iter()
        .map(|a| a.slice(k, a.len()))
        .collect::<Result<Vec<_>>>()?;
    let acc = match mu.provenance {
        Provenance::Shifted(s) => s,
        _ => 0.0,
    };
    EmpiricalMeasure::new(atoms, Provenance::Shifted(acc + k as f64 * mu.dt_sample()))
}

/// Atomwise evaluation ℰ_t.
pub fn eval_measure(mu: &EmpiricalMeasure, t: f64) -> Result<Vec<SpectralVectorField>> {
    let k = mu.atoms[0].offset_index(t)?;
    Ok(mu.atoms().iter().map(|a| a.state(k).clone()).collect())
}

/// Ground metric for [`kantorovich`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ground {
    D0Plus,
    D1Plus,
    /// ‖a(0) − b(0)‖ between first states (evaluation measures).
    L2State,
}

pub(crate) fn check_pair(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<()> {
    if a.n_atoms() != b.n_atoms() {
        return Err(Error::Transport(format!(
            "measures have {} and {} atoms",
            a.n_atoms(),
            b.n_atoms()
        )));
    }
    a.grid().check_same(b.grid())?;
    if (a.dt_sample() - b.dt_sample()).abs() > 1e-12 * a.dt_sample() {
        return Err(Error::TimeGrid("measures use different sample spacings".into()));
    }
    Ok(())
}

fn ground_distance(x: &Trajectory, y: &Trajectory, ground: Ground, mcfg: &MetricConfig) -> Result<f64> {
    let ds = x.dt_sample();
    let n = x.len().min(y.len());
    match ground {
        Ground::D0Plus => d0_plus_samples(&x.states()[..n], &y.states()[..n], ds, mcfg),
        Ground::D1Plus => d1_plus_samples(&x.states()[..n], &y.states()[..n], ds, mcfg),
        Ground::L2State => Ok(x.first().sub(y.first())?.l2_norm()),
    }
}

/// N×N ground-cost matrix between atoms (rows in parallel).
pub fn cost_matrix(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    ground: Ground,
    mcfg: &MetricConfig,
) -> Result<Vec<Vec<f64>>> {
    check_pair(a, b)?;
    a.atoms()
        .par_iter()
        .map(|x| {
            b.atoms()
                .iter()
                .map(|y| ground_distance(x, y, ground, mcfg))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Kantorovich distance between equal-weight measures over `ground`.
pub fn kantorovich(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    ground: Ground,
    mcfg: &MetricConfig,
) -> Result<TransportResult> {
    transport(&cost_matrix(a, b, ground, mcfg)?)
}

/// (1/N)Σ d(aᵢ, bᵢ): the cost of the identity coupling, an upper bound on
/// the Kantorovich distance.
pub fn paired_distance(a: &EmpiricalMeasure, b: &EmpiricalMeasure, ground: Ground, mcfg: &MetricConfig) -> Result<f64> {
    check_pair(a, b)?;
    let d = a
        .atoms()
        .par_iter()
        .zip(b.atoms())
        .map(|(x, y)| ground_distance(x, y, ground, mcfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}
