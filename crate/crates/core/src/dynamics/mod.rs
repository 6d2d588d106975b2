//! Time integration of du/dt + νAu + B(u,u) = f, the Grashof number and
//! the attractor / absorbing-set bounds.

mod stepper;
mod trajectory;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    bilinear_impl, dealias_in_place, leray_in_place, random_divfree_field, EnergySpectrum, SpectralVectorField,
    TorusGrid,
};

pub use stepper::BLOWUP_GROWTH;
pub(crate) use stepper::{SplitSystem, Stepper};
pub use trajectory::{NormSeries, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Backward Euler on the linear rate, forward Euler on the rest.
    ImexEuler,
    /// Integrating factor with the explicit midpoint rule.
    IfRk2,
}

impl Default for Integrator {
    fn default() -> Self {
        Integrator::IfRk2
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub viscosity_nu: f64,
    pub dt: f64,
    #[serde(default)]
    pub integrator: Integrator,
    #[serde(default = "default_true")]
    pub dealias: bool,
}

fn default_true() -> bool {
    true
}

impl SolverConfig {
    pub fn new(viscosity_nu: f64, dt: f64) -> Self {
        Self {
            viscosity_nu,
            dt,
            integrator: Integrator::IfRk2,
            dealias: true,
        }
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.viscosity_nu > 0.0 && self.viscosity_nu.is_finite()) {
            return Err(Error::Config {
                key: "solver.viscosity_nu".into(),
                message: format!("must be positive (got {})", self.viscosity_nu),
            });
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config {
                key: "solver.dt".into(),
                message: format!("must be positive (got {})", self.dt),
            });
        }
        Ok(())
    }
}

/// Time-independent body force, stored after Leray projection.
#[derive(Clone, Debug)]
pub struct Forcing {
    f: SpectralVectorField,
}

impl Forcing {
    /// f = P_σ g for the given mean-zero g.
    pub fn new(g: SpectralVectorField) -> Self {
        let mut f = g;
        leray_in_place(&mut f);
        Self { f }
    }

    pub fn zero(grid: &TorusGrid) -> Self {
        Self {
            f: SpectralVectorField::zeros(grid),
        }
    }

    /// Random divergence-free force on shells `shell_min..=shell_max`
    /// (flat shell energies), scaled to Grashof number `grashof`.
    pub fn random_shells(
        grid: &TorusGrid,
        shell_min: u32,
        shell_max: u32,
        grashof: f64,
        nu: f64,
        seed: u64,
    ) -> Result<Self> {
        let spec = EnergySpectrum::power_law(1.0, 0.0, shell_min, shell_max);
        let g = random_divfree_field(grid, &spec, seed)?;
        let target = grashof * (nu * grid.kappa0()).powi(2);
        let norm = g.l2_norm();
        if norm == 0.0 {
            return Ok(Self::zero(grid));
        }
        Ok(Self::new(g.scale(target / norm)))
    }

    pub fn field(&self) -> &SpectralVectorField {
        &self.f
    }

    pub fn grid(&self) -> &TorusGrid {
        self.f.grid()
    }

    pub fn grashof(&self, nu: f64) -> f64 {
        grashof(self, nu, self.grid().kappa0())
    }
}

/// G = ‖f‖ / (νκ₀)².
pub fn grashof(f: &Forcing, nu: f64, kappa0: f64) -> f64 {
    f.f.l2_norm() / (nu * kappa0).powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttractorBounds {
    pub h1_bound: f64,
    pub h2_bound: f64,
}

/// Bounds on the global attractor: ‖∇u‖ ≤ νκ₀G and
/// ‖Au‖ ≤ 2137 c_L⁴ νκ₀² (G + c_L⁻²)³.
pub fn attractor_bounds(g: f64, nu: f64, kappa0: f64, c_l: f64) -> AttractorBounds {
    AttractorBounds {
        h1_bound: nu * kappa0 * g,
        h2_bound: 2137.0 * c_l.powi(4) * nu * kappa0 * kappa0 * (g + c_l.powi(-2)).powi(3),
    }
}

/// Bounds defining the absorbing trajectory set: ‖∇u‖ ≤ √2 νκ₀G, with the
/// same D(A) bound as the attractor.
pub fn absorbing_bounds(g: f64, nu: f64, kappa0: f64, c_l: f64) -> AttractorBounds {
    let a = attractor_bounds(g, nu, kappa0, c_l);
    AttractorBounds {
        h1_bound: std::f64::consts::SQRT_2 * a.h1_bound,
        h2_bound: a.h2_bound,
    }
}

/// The plain forced NSE as a split system, optionally with a constant
/// extra right-hand side.
pub(crate) struct NseSystem {
    f: SpectralVectorField,
    extra: Option<SpectralVectorField>,
    rate: Vec<f64>,
    truncate: bool,
}

impl NseSystem {
    pub fn new(f: &Forcing, cfg: &SolverConfig, extra: Option<&SpectralVectorField>) -> Result<Self> {
        let g = f.grid();
        let f = prepare(f.field(), cfg.dealias);
        let extra = match extra {
            Some(e) => {
                g.check_same(e.grid())?;
                Some(prepare(e, cfg.dealias))
            }
            None => None,
        };
        Ok(Self {
            f,
            extra,
            rate: viscous_rate(g, cfg.viscosity_nu),
            truncate: cfg.dealias,
        })
    }
}

impl SplitSystem for NseSystem {
    fn rates(&self) -> Vec<Vec<f64>> {
        vec![self.rate.clone()]
    }

    fn explicit(&self, _t: f64, state: &[SpectralVectorField]) -> Result<Vec<SpectralVectorField>> {
        let mut n = bilinear_impl(&state[0], &state[0], self.truncate);
        n.scale_in_place(-1.0);
        n.axpy_in_place(1.0, &self.f);
        if let Some(e) = &self.extra {
            n.axpy_in_place(1.0, e);
        }
        Ok(vec![n])
    }
}

pub(crate) fn viscous_rate(g: &TorusGrid, nu: f64) -> Vec<f64> {
    (0..g.len()).map(|p| nu * g.k_squared(p)).collect()
}

/// Leray projection followed, when dealiasing is on, by truncation to the
/// retained band. Solver states live in this space.
pub(crate) fn prepare(u: &SpectralVectorField, dealias: bool) -> SpectralVectorField {
    let mut out = u.clone();
    if dealias {
        dealias_in_place(&mut out);
    }
    leray_in_place(&mut out);
    out
}

/// One timestep of du/dt + νAu + B(u,u) = f + extra.
///
/// The input is projected onto divergence-free fields (and onto the
/// dealiased band when `cfg.dealias`) before stepping.
pub fn step(
    u: &SpectralVectorField,
    f: &Forcing,
    cfg: &SolverConfig,
    extra_rhs: Option<&SpectralVectorField>,
) -> Result<SpectralVectorField> {
    step_at(u, f, cfg, extra_rhs, 0.0)
}

/// As [`step`], with `t` used to label a blow-up error.
pub fn step_at(
    u: &SpectralVectorField,
    f: &Forcing,
    cfg: &SolverConfig,
    extra_rhs: Option<&SpectralVectorField>,
    t: f64,
) -> Result<SpectralVectorField> {
    cfg.validate()?;
    u.grid().check_same(f.grid())?;
    let sys = NseSystem::new(f, cfg, extra_rhs)?;
    let stepper = Stepper::new(cfg.dt, cfg.integrator, &sys.rates());
    let mut state = vec![prepare(u, cfg.dealias)];
    stepper.step(&sys, t, &mut state)?;
    Ok(state.pop().expect("one field"))
}

/// Number of whole steps of size `dt` in `t_final`.
pub(crate) fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "t_final must be non-negative (got {t_final})"
        )));
    }
    Ok((t_final / dt).round() as usize)
}

/// Runs a split system for `n_steps`, recording the listed fields every
/// `stride` steps (including step 0). Returns the recordings and the
/// final coupled state.
pub(crate) fn run_system<S: SplitSystem>(
    sys: &S,
    cfg: &SolverConfig,
    t_start: f64,
    mut state: Vec<SpectralVectorField>,
    n_steps: usize,
    stride: usize,
    record: &[usize],
) -> Result<(Vec<Vec<SpectralVectorField>>, Vec<SpectralVectorField>)> {
    if stride == 0 {
        return Err(Error::InvalidArgument("sample_stride must be >= 1".into()));
    }
    let stepper = Stepper::new(cfg.dt, cfg.integrator, &sys.rates());
    let mut out: Vec<Vec<SpectralVectorField>> = record.iter().map(|&i| vec![state[i].clone()]).collect();
    let g = state[0].grid().clone();
    let cfl_scale = cfg.dt * g.n_modes() as f64 / g.period();
    let mut warned = false;
    for s in 0..n_steps {
        let t = t_start + s as f64 * cfg.dt;
        stepper.step(sys, t, &mut state)?;
        if (s + 1) % stride == 0 {
            for (slot, &i) in out.iter_mut().zip(record) {
                slot.push(state[i].clone());
            }
            if !warned {
                let umax = state[0].to_physical().max_abs();
                if umax * cfl_scale > 0.5 {
                    log::warn!(
                        "CFL advisory exceeded at t = {}: dt*max|u|*N/L = {:.3}",
                        t + cfg.dt,
                        umax * cfl_scale
                    );
                    warned = true;
                }
            }
        }
    }
    Ok((out, state))
}

/// S(t)u₀ sampled every `sample_stride` steps. The path holds
/// floor(n_steps / sample_stride) + 1 samples, n_steps = round(t_final/dt).
pub fn integrate(
    u0: &SpectralVectorField,
    f: &Forcing,
    cfg: &SolverConfig,
    t_final: f64,
    sample_stride: usize,
) -> Result<Trajectory> {
    integrate_from(u0, 0.0, f, cfg, t_final, sample_stride)
}

/// As [`integrate`], with the first sample labelled `t0`.
pub fn integrate_from(
    u0: &SpectralVectorField,
    t0: f64,
    f: &Forcing,
    cfg: &SolverConfig,
    t_final: f64,
    sample_stride: usize,
) -> Result<Trajectory> {
    cfg.validate()?;
    u0.grid().check_same(f.grid())?;
    let sys = NseSystem::new(f, cfg, None)?;
    let n = step_count(t_final, cfg.dt)?;
    let (mut rec, _) = run_system(&sys, cfg, t0, vec![prepare(u0, cfg.dealias)], n, sample_stride, &[0])?;
    Trajectory::new(
        u0.grid(),
        t0,
        cfg.dt * sample_stride as f64,
        rec.pop().expect("one recording"),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinUpOptions {
    /// Trailing window over which the bound must hold; default (νκ₀²)⁻¹.
    pub window: Option<f64>,
    /// Give up after this much simulated time.
    pub t_max: f64,
}

impl Default for SpinUpOptions {
    fn default() -> Self {
        Self {
            window: None,
            t_max: 1.0e3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpinUp {
    pub state: SpectralVectorField,
    /// Time at which the trailing-window test first succeeded.
    pub t0: f64,
    pub final_h1: f64,
    pub bound: f64,
}

/// Integrates until ‖∇u‖ ≤ √2 νκ₀G has held on every step of a trailing
/// window; returns that state and the achieved time.
pub fn spin_up_to_absorbing(
    u0: &SpectralVectorField,
    f: &Forcing,
    cfg: &SolverConfig,
    g: f64,
    opts: &SpinUpOptions,
) -> Result<SpinUp> {
    cfg.validate()?;
    u0.grid().check_same(f.grid())?;
    let grid = u0.grid();
    let nu = cfg.viscosity_nu;
    let k0 = grid.kappa0();
    let window = opts.window.unwrap_or(1.0 / (nu * k0 * k0));
    let bound = absorbing_bounds(g, nu, k0, 1.0).h1_bound;
    // Tiny absolute slack so that G = 0 terminates once the flow has decayed.
    let tol = bound * (1.0 + 1e-12) + 1e-10 * nu * k0;
    let sys = NseSystem::new(f, cfg, None)?;
    let stepper = Stepper::new(cfg.dt, cfg.integrator, &sys.rates());
    let mut state = vec![prepare(u0, cfg.dealias)];
    let mut inside_since: Option<f64> = if state[0].h1_norm() <= tol { Some(0.0) } else { None };
    let max_steps = step_count(opts.t_max, cfg.dt)?;
    for s in 0..max_steps {
        let t = s as f64 * cfg.dt;
        stepper.step(&sys, t, &mut state)?;
        let t_new = (s + 1) as f64 * cfg.dt;
        let h1 = state[0].h1_norm();
        if h1 <= tol {
            let since = *inside_since.get_or_insert(t_new);
            if t_new - since >= window - 0.5 * cfg.dt {
                let u = state.pop().expect("one field");
                return Ok(SpinUp {
                    state: u,
                    t0: t_new,
                    final_h1: h1,
                    bound,
                });
            }
        } else {
            inside_since = None;
        }
    }
    Err(Error::SpinUpTimeout {
        t_max: opts.t_max,
        last_h1: state[0].h1_norm(),
        bound,
    })
}
