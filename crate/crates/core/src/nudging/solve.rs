use std::sync::Arc;

use super::config::NudgingConfig;
use super::observe::ObservationStream;
use crate::dynamics::{prepare, run_system, step_count, viscous_rate, Forcing, SolverConfig, SplitSystem, Trajectory};
use crate::error::{Error, Result};
use crate::interpolants::{apply_j, InterpolantOp};
use crate::spectral::{bilinear_impl, SpectralVectorField};

/// Largest admissible β·dt·νκ₀² when the nudging term is explicit.
pub const EXPLICIT_NUDGING_LIMIT: f64 = 0.5;

/// Observation samples after P_σ and band projection, linearly
/// interpolated in time.
struct ProjectedStream {
    t0: f64,
    dt: f64,
    vals: Vec<SpectralVectorField>,
}

impl ProjectedStream {
    fn new(v: &ObservationStream, dealias: bool) -> Self {
        Self {
            t0: v.t0(),
            dt: v.dt_sample(),
            vals: v.values().iter().map(|x| prepare(x, dealias)).collect(),
        }
    }

    fn at(&self, t: f64) -> SpectralVectorField {
        let x = ((t - self.t0) / self.dt).max(0.0);
        let last = self.vals.len() - 1;
        let i = (x.floor() as usize).min(last);
        let theta = x - i as f64;
        if i == last || theta <= 1e-12 {
            return self.vals[i].clone();
        }
        if theta >= 1.0 - 1e-12 {
            return self.vals[i + 1].clone();
        }
        let mut out = self.vals[i].scale(1.0 - theta);
        out.axpy_in_place(theta, &self.vals[i + 1]);
        out
    }
}

/// Shared pieces of every nudged system: forcing, rates and the
/// nudging term −βνκ₀² P_σ(J w − v).
struct NudgeCore {
    f: SpectralVectorField,
    truncate: bool,
    nu_rate: Vec<f64>,
    w_rate: Vec<f64>,
    gamma: f64,
    op: Arc<InterpolantOp>,
    modal: bool,
}

impl NudgeCore {
    fn new(f: &Forcing, cfg: &SolverConfig, ncfg: &NudgingConfig) -> Result<Self> {
        cfg.validate()?;
        let g = f.grid();
        g.check_same(ncfg.interpolant.grid())?;
        let k0 = g.kappa0();
        let gamma = ncfg.beta * cfg.viscosity_nu * k0 * k0;
        let nu_rate = viscous_rate(g, cfg.viscosity_nu);
        let modal = ncfg.interpolant.is_modal();
        let w_rate = match ncfg.interpolant.modal_mask() {
            // P_σ P_N w = P_N w for divergence-free w: exact damping in the factor.
            Some(mask) => nu_rate
                .iter()
                .zip(mask)
                .map(|(&r, &m)| if m { r + gamma } else { r })
                .collect(),
            None => {
                if gamma * cfg.dt > EXPLICIT_NUDGING_LIMIT {
                    return Err(Error::InvalidArgument(format!(
                        "explicit nudging needs beta*dt*nu*kappa0^2 <= {EXPLICIT_NUDGING_LIMIT} \
                         (got {:.4}); reduce dt or use a modal interpolant",
                        gamma * cfg.dt
                    )));
                }
                nu_rate.clone()
            }
        };
        Ok(Self {
            f: prepare(f.field(), cfg.dealias),
            truncate: cfg.dealias,
            nu_rate,
            w_rate,
            gamma,
            op: ncfg.interpolant.clone(),
            modal,
        })
    }

    fn project(&self, x: &SpectralVectorField) -> SpectralVectorField {
        prepare(x, self.truncate)
    }

    /// Adds −γ P_σ J(x) for non-modal operators (modal damping lives in the rate).
    fn add_damping(&self, n: &mut SpectralVectorField, x: &SpectralVectorField) -> Result<()> {
        if !self.modal && self.gamma != 0.0 {
            let jx = self.project(&apply_j(&self.op, x)?);
            n.axpy_in_place(-self.gamma, &jx);
        }
        Ok(())
    }

    /// f − B(w, w) + γ·src − [γ P_σ J w].
    fn nudged_rhs(&self, w: &SpectralVectorField, src: &SpectralVectorField) -> Result<SpectralVectorField> {
        let mut n = bilinear_impl(w, w, self.truncate);
        n.scale_in_place(-1.0);
        n.axpy_in_place(1.0, &self.f);
        if self.gamma != 0.0 {
            n.axpy_in_place(self.gamma, src);
        }
        self.add_damping(&mut n, w)?;
        Ok(n)
    }
}

/// dw/dt + νAw + B(w,w) = f − βνκ₀²P_σ(Jw − v(t)).
struct StreamSystem {
    core: NudgeCore,
    v: ProjectedStream,
}

impl SplitSystem for StreamSystem {
    fn rates(&self) -> Vec<Vec<f64>> {
        vec![self.core.w_rate.clone()]
    }

    fn explicit(&self, t: f64, s: &[SpectralVectorField]) -> Result<Vec<SpectralVectorField>> {
        Ok(vec![self.core.nudged_rhs(&s[0], &self.v.at(t))?])
    }
}

/// Truth u and the synchronization error δ = w − u advanced together:
/// dδ/dt + νAδ + B(u,δ) + B(δ,u) + B(δ,δ) = −βνκ₀²P_σJδ, which is the
/// nudged equation with v = J u. In these coordinates δ ≡ 0 is an exact
/// discrete solution, so synchronization is not limited by the mismatch
/// between the discrete truth and the discrete nudged dynamics.
struct TwinSystem {
    core: NudgeCore,
}

impl SplitSystem for TwinSystem {
    fn rates(&self) -> Vec<Vec<f64>> {
        vec![self.core.nu_rate.clone(), self.core.w_rate.clone()]
    }

    fn explicit(&self, _t: f64, s: &[SpectralVectorField]) -> Result<Vec<SpectralVectorField>> {
        let c = &self.core;
        let (u, d) = (&s[0], &s[1]);
        let mut nu = bilinear_impl(u, u, c.truncate);
        nu.scale_in_place(-1.0);
        nu.axpy_in_place(1.0, &c.f);
        let mut nd = bilinear_impl(u, d, c.truncate);
        nd.axpy_in_place(1.0, &bilinear_impl(d, u, c.truncate));
        nd.axpy_in_place(1.0, &bilinear_impl(d, d, c.truncate));
        nd.scale_in_place(-1.0);
        c.add_damping(&mut nd, d)?;
        Ok(vec![nu, nd])
    }
}

/// (w, w*) with w* solving the linearization around w:
/// dw*/dt + νAw* + B(w,w*) + B(w*,w) = −βνκ₀²P_σ(Jw* − v̄).
struct TangentSystem {
    core: NudgeCore,
    v: ProjectedStream,
    vbar: ProjectedStream,
}

impl SplitSystem for TangentSystem {
    fn rates(&self) -> Vec<Vec<f64>> {
        vec![self.core.w_rate.clone(), self.core.w_rate.clone()]
    }

    fn explicit(&self, t: f64, s: &[SpectralVectorField]) -> Result<Vec<SpectralVectorField>> {
        let c = &self.core;
        let (w, ws) = (&s[0], &s[1]);
        let nw = c.nudged_rhs(w, &self.v.at(t))?;
        let mut ns = bilinear_impl(w, ws, c.truncate);
        ns.axpy_in_place(1.0, &bilinear_impl(ws, w, c.truncate));
        ns.scale_in_place(-1.0);
        if c.gamma != 0.0 {
            ns.axpy_in_place(c.gamma, &self.vbar.at(t));
        }
        c.add_damping(&mut ns, ws)?;
        Ok(vec![nw, ns])
    }
}

/// Solver steps per observation sample.
fn steps_per_sample(v: &ObservationStream, cfg: &SolverConfig) -> Result<usize> {
    let x = v.dt_sample() / cfg.dt;
    let k = x.round();
    if k < 1.0 || (x - k).abs() > 1e-9 * x {
        return Err(Error::TimeGrid(format!(
            "observation spacing {} is not a multiple of dt = {}",
            v.dt_sample(),
            cfg.dt
        )));
    }
    Ok(k as usize)
}

fn warn_admissibility(v: &ObservationStream, f: &Forcing, cfg: &SolverConfig, ncfg: &NudgingConfig) {
    let g = f.grashof(cfg.viscosity_nu);
    let a = ncfg.admissibility(g, f.grid().kappa0());
    if ncfg.no_nudging() {
        log::warn!("no nudging (beta = 0)");
        return;
    }
    if !a.condbeta_ok {
        log::warn!(
            "beta = {} is below c1*(G^2/beta + rho^2) log[...] = {:.4} (G = {g:.4}, rho = {})",
            ncfg.beta,
            a.condbeta_rhs,
            ncfg.rho
        );
    }
    if !a.condbetah_ok {
        log::warn!(
            "beta kappa0^2 h^2 = {:.4} exceeds c2* = {}",
            a.condbetah_lhs,
            ncfg.constants.c2_star
        );
    }
    let x = v.x_norm(cfg.viscosity_nu);
    if x > ncfg.rho * (1.0 + 1e-12) {
        log::warn!("observation X-norm {x:.4} exceeds rho = {}", ncfg.rho);
    }
}

/// Nudged solution from `w0` at the stream's first sample, sampled on the
/// stream's time grid.
pub fn solve_nudged_from(
    w0: &SpectralVectorField,
    v: &ObservationStream,
    f: &Forcing,
    cfg: &SolverConfig,
    ncfg: &NudgingConfig,
) -> Result<Trajectory> {
    f.grid().check_same(v.grid())?;
    f.grid().check_same(w0.grid())?;
    warn_admissibility(v, f, cfg, ncfg);
    let stride = steps_per_sample(v, cfg)?;
    let core = NudgeCore::new(f, cfg, ncfg)?;
    let sys = StreamSystem {
        v: ProjectedStream::new(v, cfg.dealias),
        core,
    };
    let n = (v.len() - 1) * stride;
    let (mut rec, _) = run_system(&sys, cfg, v.t0(), vec![prepare(w0, cfg.dealias)], n, stride, &[0])?;
    Trajectory::new(v.grid(), v.t0(), v.dt_sample(), rec.pop().expect("recording"))
}

/// W₊(v): the nudged solution with w(t₀) = 0.
pub fn solve_wplus(v: &ObservationStream, f: &Forcing, cfg: &SolverConfig, ncfg: &NudgingConfig) -> Result<Trajectory> {
    solve_nudged_from(&SpectralVectorField::zeros(v.grid()), v, f, cfg, ncfg)
}

/// Burn-in length with e^{−βνκ₀²T/4} ≤ 10⁻¹², i.e. forgetting to 10⁻¹²
/// even at the guaranteed rate βνκ₀²/4 (the factor e^{−βνκ₀²T} is far smaller).
pub fn default_burn_in(beta: f64, nu: f64, kappa0: f64) -> f64 {
    4.0 * (1e12f64).ln() / (beta * nu * kappa0 * kappa0)
}

/// Approximates W(v) on [0, T_end] by W₊ started at −T_burn. The stream
/// must cover [−T_burn, T_end] and contain t = 0 as a sample time; the
/// start is the latest sample at or before −T_burn.
pub fn solve_w_burnin(
    v: &ObservationStream,
    f: &Forcing,
    cfg: &SolverConfig,
    ncfg: &NudgingConfig,
    t_burn: Option<f64>,
) -> Result<Trajectory> {
    let k0 = v.grid().kappa0();
    let tb = t_burn.unwrap_or_else(|| default_burn_in(ncfg.beta, cfg.viscosity_nu, k0));
    if !(tb > 0.0) || !tb.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "burn-in time must be positive (got {tb})"
        )));
    }
    let ds = v.dt_sample();
    let zero = -v.t0() / ds;
    let iz = zero.round();
    if iz < 0.0 || (zero - iz).abs() > 1e-9 * zero.abs().max(1.0) || iz as usize >= v.len() {
        return Err(Error::TimeGrid(format!(
            "t = 0 is not a sample time of the stream (t0 = {}, dt = {ds})",
            v.t0()
        )));
    }
    let iz = iz as usize;
    let back = (tb / ds - 1e-9).ceil() as usize;
    if back > iz {
        return Err(Error::InsufficientSpan(format!(
            "stream starts at {} but burn-in needs data from {}",
            v.t0(),
            -tb
        )));
    }
    let start = iz - back;
    let sub = v.tail_from(start, v.time(start))?;
    let w = solve_wplus(&sub, f, cfg, ncfg)?;
    let tail = w.slice(back, w.len())?;
    Trajectory::new(v.grid(), 0.0, ds, tail.into_states())
}

/// Linearized solve around W₊(v) with w*(t₀) = 0; returns (w, w*).
pub fn solve_linearized_pair(
    v: &ObservationStream,
    vbar: &ObservationStream,
    f: &Forcing,
    cfg: &SolverConfig,
    ncfg: &NudgingConfig,
) -> Result<(Trajectory, Trajectory)> {
    v.check_aligned(vbar)?;
    f.grid().check_same(v.grid())?;
    let stride = steps_per_sample(v, cfg)?;
    let core = NudgeCore::new(f, cfg, ncfg)?;
    let sys = TangentSystem {
        v: ProjectedStream::new(v, cfg.dealias),
        vbar: ProjectedStream::new(vbar, cfg.dealias),
        core,
    };
    let z = SpectralVectorField::zeros(v.grid());
    let n = (v.len() - 1) * stride;
    let (mut rec, _) = run_system(&sys, cfg, v.t0(), vec![z.clone(), z], n, stride, &[0, 1])?;
    let ws = rec.pop().expect("recording");
    let w = rec.pop().expect("recording");
    Ok((
        Trajectory::new(v.grid(), v.t0(), v.dt_sample(), w)?,
        Trajectory::new(v.grid(), v.t0(), v.dt_sample(), ws)?,
    ))
}

/// The derivative w* = 𝒟(v, v̄) of W₊ at v in the direction v̄.
pub fn solve_linearized(
    v: &ObservationStream,
    vbar: &ObservationStream,
    f: &Forcing,
    cfg: &SolverConfig,
    ncfg: &NudgingConfig,
) -> Result<Trajectory> {
    Ok(solve_linearized_pair(v, vbar, f, cfg, ncfg)?.1)
}

/// Paired truth and nudged trajectories of a twin experiment, with the
/// error δ = w − u as integrated.
#[derive(Clone, Debug)]
pub struct TwinRun {
    pub truth: Trajectory,
    pub nudged: Trajectory,
    pub error: Trajectory,
}

impl TwinRun {
    fn from_recordings(
        grid: &crate::spectral::TorusGrid,
        t0: f64,
        ds: f64,
        mut rec: Vec<Vec<SpectralVectorField>>,
    ) -> Result<Self> {
        let d = rec.pop().expect("recording");
        let u = rec.pop().expect("recording");
        let w = u.iter().zip(&d).map(|(a, b)| a.add(b)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            truth: Trajectory::new(grid, t0, ds, u)?,
            nudged: Trajectory::new(grid, t0, ds, w)?,
            error: Trajectory::new(grid, t0, ds, d)?,
        })
    }
}

/// Twin experiment in lockstep: the truth u (from `u0`) and the nudged
/// solution w (from `w0`) are advanced by one coupled stepper, with the
/// observation v = J u evaluated at every stage in error coordinates. The truth follows
/// exactly the arithmetic of [`crate::dynamics::integrate`], so its
/// samples coincide bitwise with a separate integration.
pub fn twin_run(
    u0: &SpectralVectorField,
    w0: &SpectralVectorField,
    t0: f64,
    duration: f64,
    sample_stride: usize,
    f: &Forcing,
    cfg: &SolverConfig,
    ncfg: &NudgingConfig,
) -> Result<TwinRun> {
    f.grid().check_same(u0.grid())?;
    f.grid().check_same(w0.grid())?;
    let sys = TwinSystem {
        core: NudgeCore::new(f, cfg, ncfg)?,
    };
    let n = step_count(duration, cfg.dt)?;
    let u0 = prepare(u0, cfg.dealias);
    let d0 = prepare(w0, cfg.dealias).sub(&u0)?;
    let (rec, _) = run_system(&sys, cfg, t0, vec![u0, d0], n, sample_stride, &[0, 1])?;
    TwinRun::from_recordings(w0.grid(), t0, cfg.dt * sample_stride as f64, rec)
}

/// Lockstep burn-in: the truth starts from `u_start` at −T_burn (rounded
/// to whole steps), w from zero; both are returned on [0, T_end].
pub fn twin_burnin(
    u_start: &SpectralVectorField,
    t_burn: f64,
    t_end: f64,
    sample_stride: usize,
    f: &Forcing,
    cfg: &SolverConfig,
    ncfg: &NudgingConfig,
) -> Result<TwinRun> {
    let sys = TwinSystem {
        core: NudgeCore::new(f, cfg, ncfg)?,
    };
    let nb = step_count(t_burn, cfg.dt)?;
    let u0 = prepare(u_start, cfg.dealias);
    // w starts from zero: δ = −u.
    let d0 = u0.scale(-1.0);
    let state = vec![u0, d0];
    let t_start = -(nb as f64) * cfg.dt;
    let (_, state) = run_system(&sys, cfg, t_start, state, nb, nb.max(1), &[])?;
    let n = step_count(t_end, cfg.dt)?;
    let (rec, _) = run_system(&sys, cfg, 0.0, state, n, sample_stride, &[0, 1])?;
    TwinRun::from_recordings(u_start.grid(), 0.0, cfg.dt * sample_stride as f64, rec)
}
