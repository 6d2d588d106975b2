use std::f64::consts::PI;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use nudge_nse::dynamics::{integrate, Forcing, SolverConfig};
use nudge_nse::ensemble::optimal_assignment;
use nudge_nse::interpolants::{
    appendix_draws, build_interpolant, measure_across_h, BoundId, InterpolantKind, InterpolantOp, InterpolantSpec,
};
use nudge_nse::nudging::{
    advise_parameters, observe, solve_linearized_pair, solve_wplus, y_norm, NudgingConfig, NudgingConstants,
};
use nudge_nse::spectral::{
    bilinear_b, leray_project, make_grid, random_divfree_field, random_vector_field, stokes_apply, EnergySpectrum,
    SpectralVectorField,
};

use crate::manifest::Outputs;
use crate::VerifyArgs;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Spectral,
    Dynamics,
    Interpolant,
    Frechet,
    Transport,
    All,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub value: f64,
    /// "<=" or ">=".
    pub relation: &'static str,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(suite: &'static str, name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            suite,
            name,
            value,
            relation: "<=",
            threshold,
            passed: value <= threshold,
        }
    }

    fn at_least(suite: &'static str, name: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            suite,
            name,
            value,
            relation: ">=",
            threshold,
            passed: value >= threshold,
        }
    }
}

#[derive(Debug)]
pub struct SuiteFailed {
    pub failed: Vec<String>,
}

impl std::fmt::Display for SuiteFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed: {}", self.failed.len(), self.failed.join(", "))
    }
}

impl std::error::Error for SuiteFailed {}

type Checks = anyhow::Result<Vec<Check>>;

/// Nonlinear-term identities, transform round trips and the Leray projector
/// on random fields.
pub fn spectral(seed: u64) -> Checks {
    let g = make_grid(32, 2.0 * PI)?;
    let spec = EnergySpectrum::power_law(1.0, 2.0, 1, 10);
    let (mut enst, mut ener, mut trip, mut idem, mut div) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..20 {
        let u = random_divfree_field(&g, &spec, seed.wrapping_add(i))?;
        let b = bilinear_b(&u, &u)?;
        let au = stokes_apply(&u);
        enst = enst.max(b.inner(&au)?.abs() / (b.l2_norm() * au.l2_norm()));
        ener = ener.max(b.inner(&u)?.abs() / (b.l2_norm() * u.l2_norm()));
        trip = trip.max(u.to_physical().to_spectral().sub(&u)?.l2_norm() / u.l2_norm());
        let w = random_vector_field(&g, &spec, seed.wrapping_add(1000 + i))?;
        let pw = leray_project(&w);
        idem = idem.max(leray_project(&pw).sub(&pw)?.l2_norm() / pw.l2_norm());
        div = div.max(pw.max_relative_divergence());
    }
    Ok(vec![
        Check::at_most("spectral", "b_orthogonal_to_stokes", enst, 1e-10),
        Check::at_most("spectral", "b_orthogonal_to_u", ener, 1e-10),
        Check::at_most("spectral", "transform_round_trip", trip, 1e-12),
        Check::at_most("spectral", "leray_idempotent", idem, 1e-12),
        Check::at_most("spectral", "leray_divergence_free", div, 1e-12),
    ])
}

/// Taylor-Green decay against the exact solution and second-order
/// self-convergence on a nonlinear flow.
pub fn dynamics(seed: u64) -> Checks {
    let g = make_grid(32, 2.0 * PI)?;
    let nu = 0.1;
    let f = Forcing::zero(&g);
    let u0 = SpectralVectorField::taylor_green(&g, 1.0);
    let cfg = SolverConfig::new(nu, 1e-3);
    let tr = integrate(&u0, &f, &cfg, 1.0, 1000)?;
    let exact = u0.scale((-2.0 * nu).exp());
    let tg = tr.last().sub(&exact)?.l2_norm() / exact.l2_norm();

    let u0 = random_divfree_field(&g, &EnergySpectrum::power_law(1.0, 1.0, 1, 6), seed)?;
    let u0 = nudge_nse::spectral::rescale_h1(&u0, 8.0);
    let run = |dt: f64| -> anyhow::Result<SpectralVectorField> {
        let n = (0.5 / dt).round() as usize;
        Ok(integrate(&u0, &f, &SolverConfig::new(nu, dt), 0.5, n)?.last().clone())
    };
    let reference = run(2.5e-4)?;
    let e1 = run(4e-3)?.sub(&reference)?.l2_norm();
    let e2 = run(2e-3)?.sub(&reference)?.l2_norm();
    Ok(vec![
        Check::at_most("dynamics", "taylor_green_error", tg, 1e-5),
        Check::at_least("dynamics", "halving_dt_ratio", e1 / e2, 3.5),
    ])
}

fn spread(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x / mean - 1.0).abs()).fold(0.0, f64::max)
}

fn cell_op(kind: impl Fn(f64) -> InterpolantKind, c: usize) -> nudge_nse::Result<InterpolantOp> {
    let l = 2.0 * PI;
    let grid = make_grid(4 * c, l)?;
    build_interpolant(&InterpolantSpec {
        kind: kind(l / c as f64),
        grid,
    })
}

/// Stability of the measured approximation constants across h and the
/// oscillation inequality on random draws.
pub fn interpolant(seed: u64) -> Checks {
    let cells = [8, 16, 32];
    let n = 24;
    let va = measure_across_h(
        |c| cell_op(|h| InterpolantKind::VolumeAvg { h, eps: None }, c),
        &cells,
        BoundId::Type1,
        n,
        seed,
    )?;
    let nodal = measure_across_h(
        |c| {
            cell_op(
                |h| InterpolantKind::Nodal {
                    h,
                    eps: None,
                    node_offset: [0.5, 0.5],
                },
                c,
            )
        },
        &cells,
        BoundId::Type2b,
        n,
        seed,
    )?;
    let c_va: Vec<f64> = va.iter().map(|r| r.measured_constants[0]).collect();
    let c_nodal: Vec<f64> = nodal.iter().map(|r| r.measured_constants[0]).collect();
    let finite = c_va.iter().chain(&c_nodal).all(|c| c.is_finite() && *c > 0.0);
    let draws = appendix_draws(200, seed)?;
    let violations = draws.iter().filter(|(l, r)| l > r).count();
    Ok(vec![
        Check::at_most("interpolant", "constants_finite", if finite { 0.0 } else { 1.0 }, 0.0),
        Check::at_most("interpolant", "volume_avg_type1_spread", spread(&c_va), 0.2),
        Check::at_most("interpolant", "nodal_type2b_spread", spread(&c_nodal), 0.2),
        Check::at_most("interpolant", "appendix_violations", violations as f64, 0.0),
    ])
}

/// Log-log slope of ‖W(v+εv̄) − W(v) − ε𝒟(v,v̄)‖_Y over ε ∈ {10⁻¹, 10⁻², 10⁻³}.
pub fn frechet(seed: u64) -> Checks {
    let g = make_grid(16, 2.0 * PI)?;
    let nu = 1.0;
    let cfg = SolverConfig::new(nu, 5e-3);
    let f = Forcing::random_shells(&g, 2, 3, 5.0, nu, seed)?;
    let op = build_interpolant(&InterpolantSpec::modal(&g, 3))?;
    let spec = EnergySpectrum::power_law(1.0, 1.0, 1, 5);
    let ua = integrate(&rescale(random_divfree_field(&g, &spec, seed)?, 5.0), &f, &cfg, 2.0, 4)?;
    let ub = integrate(
        &rescale(random_divfree_field(&g, &spec, seed + 1)?, 5.0),
        &f,
        &cfg,
        2.0,
        4,
    )?;
    let v = observe(&ua, &op, None)?;
    let vbar = observe(&ub, &op, None)?;
    let rho = v.x_norm(nu).max(v.lincomb(1.0, &vbar, 0.1)?.x_norm(nu));
    let adv = advise_parameters(f.grashof(nu), rho, &NudgingConstants::default(), 1.0)?;
    let ncfg = NudgingConfig::new(adv.beta_min, op, rho, NudgingConstants::default())?;
    let (w, dw) = solve_linearized_pair(&v, &vbar, &f, &cfg, &ncfg)?;
    let eps = [1e-1, 1e-2, 1e-3];
    let mut res = Vec::new();
    for e in eps {
        let we = solve_wplus(&v.lincomb(1.0, &vbar, e)?, &f, &cfg, &ncfg)?;
        let r = we.sub(&w)?.sub(&dw_scaled(&dw, e)?)?;
        res.push(y_norm(&r, nu)?);
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = res.iter().map(|r| r.ln()).collect();
    let slope = least_squares_slope(&x, &y);
    Ok(vec![
        Check::at_least("frechet", "residual_slope_min", slope, 1.8),
        Check::at_most("frechet", "residual_slope_max", slope, 2.2),
    ])
}

fn rescale(u: SpectralVectorField, r: f64) -> SpectralVectorField {
    nudge_nse::spectral::rescale_h1(&u, r)
}

fn dw_scaled(dw: &nudge_nse::dynamics::Trajectory, e: f64) -> nudge_nse::Result<nudge_nse::dynamics::Trajectory> {
    nudge_nse::dynamics::Trajectory::new(
        dw.grid(),
        dw.t0(),
        dw.dt_sample(),
        dw.states().iter().map(|s| s.scale(e)).collect(),
    )
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Exact assignment against factorial brute force on random point clouds.
pub fn transport(seed: u64) -> Checks {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 5;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let pts = |rng: &mut ChaCha8Rng| -> Vec<[f64; 3]> {
            (0..n)
                .map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])
                .collect()
        };
        let (a, b) = (pts(&mut rng), pts(&mut rng));
        let cost: Vec<Vec<f64>> = a
            .iter()
            .map(|p| {
                b.iter()
                    .map(|q| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>().sqrt())
                    .collect()
            })
            .collect();
        let (_, total) = optimal_assignment(&cost)?;
        let brute = (0..n)
            .permutations(n)
            .map(|s| s.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max((total - brute).abs());
    }
    Ok(vec![Check::at_most(
        "transport",
        "assignment_vs_brute_force",
        worst,
        1e-12,
    )])
}

pub fn run_suite(suite: Suite, seed: u64) -> Checks {
    Ok(match suite {
        Suite::Spectral => spectral(seed)?,
        Suite::Dynamics => dynamics(seed)?,
        Suite::Interpolant => interpolant(seed)?,
        Suite::Frechet => frechet(seed)?,
        Suite::Transport => transport(seed)?,
        Suite::All => {
            let mut v = Vec::new();
            for s in [
                Suite::Spectral,
                Suite::Dynamics,
                Suite::Interpolant,
                Suite::Frechet,
                Suite::Transport,
            ] {
                v.extend(run_suite(s, seed)?);
            }
            v
        }
    })
}

pub fn run(a: &VerifyArgs) -> anyhow::Result<()> {
    let checks = run_suite(a.suite, a.seed)?;
    for c in &checks {
        println!(
            "{} {}/{}: {:.3e} {} {:.3e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.suite,
            c.name,
            c.value,
            c.relation,
            c.threshold
        );
    }
    let mut out = Outputs::new(&a.output_dir)?;
    let report = serde_json::json!({"suite": a.suite, "seed": a.seed, "checks": checks});
    nudge_nse::io::write_json(&report, &out.path("verify.json"))?;
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}/{}", c.suite, c.name))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(SuiteFailed { failed }.into())
    }
}
