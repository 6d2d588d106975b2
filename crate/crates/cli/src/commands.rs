use std::path::{Path, PathBuf};

use anyhow::Context;
use serde_json::{json, Value};

use nudge_nse::dynamics::{integrate, spin_up_to_absorbing, Forcing, SolverConfig, SpinUpOptions};
use nudge_nse::ensemble::{
    decay_table, push_forward_s, push_forward_wj_lockstep, sample_initial_measure, InitialKind, MetricConfig,
};
use nudge_nse::interpolants::{build_interpolant, InterpolantOp, InterpolantSpec};
use nudge_nse::io::{
    apply_override, read_container, read_snapshot, read_trajectory, write_diagnostics, write_ensemble, write_json,
    write_observations, write_snapshot, write_trajectory, Diagnostics, InitialConfig, RunConfig,
};
use nudge_nse::nudging::{
    advise_parameters, condbeta_rhs, observe, rho_floors, solve_wplus, sync_report, twin_run, NudgingConfig,
    NudgingConstants, ObservationStream, SyncOptions,
};
use nudge_nse::spectral::{random_divfree_field, rescale_h1, SpectralVectorField, TorusGrid};
use nudge_nse::Error;

use crate::manifest::{write_manifest, Outputs};
use crate::{InfoArgs, ParamsArgs, RunArgs};

/// A parsed run configuration with its provenance.
struct Loaded {
    cfg: RunConfig,
    resolved: Value,
    /// Directory of the config file; relative input paths resolve here.
    base: PathBuf,
    inputs: Vec<PathBuf>,
}

fn config_err(key: &str, message: &str) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

/// Reads the config, applies --set overrides, then --seed to every
/// sampling seed present.
fn load(a: &RunArgs) -> anyhow::Result<Loaded> {
    let text = std::fs::read_to_string(&a.config).map_err(|e| Error::Io {
        path: a.config.clone(),
        source: e,
    })?;
    let mut doc: Value = serde_json::from_str(&text).map_err(Error::from)?;
    for o in &a.overrides {
        let (k, v) = nudge_nse::io::parse_override(o)?;
        apply_override(&mut doc, &k, &v)?;
    }
    if let Some(s) = a.seed {
        let s = s.to_string();
        if doc.pointer("/initial/type").and_then(Value::as_str) == Some("random") {
            apply_override(&mut doc, "initial.seed", &s)?;
        }
        if doc.pointer("/ensemble").is_some_and(Value::is_object) {
            apply_override(&mut doc, "ensemble.seed", &s)?;
        }
        if doc.pointer("/nudging/noise").is_some_and(Value::is_object) {
            apply_override(&mut doc, "nudging.noise.seed", &s)?;
        }
    }
    let cfg = RunConfig::from_value(&doc)?;
    let resolved = serde_json::to_value(&cfg)?;
    let base = a
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let mut inputs = vec![a.config.clone()];
    if let InitialConfig::Snapshot { path } = &cfg.initial {
        inputs.push(base.join(path));
    }
    if let Some(r) = cfg.nudging.as_ref().and_then(|n| n.reference.as_ref()) {
        inputs.push(base.join(r));
    }
    Ok(Loaded {
        cfg,
        resolved,
        base,
        inputs,
    })
}

struct Setup {
    grid: TorusGrid,
    forcing: Forcing,
    solver: SolverConfig,
    grashof: f64,
}

fn setup(cfg: &RunConfig) -> anyhow::Result<Setup> {
    let grid = cfg.grid.build()?;
    let forcing = cfg.forcing.build(&grid, cfg.solver.viscosity_nu)?;
    let grashof = forcing.grashof(cfg.solver.viscosity_nu);
    Ok(Setup {
        grid,
        forcing,
        solver: cfg.solver,
        grashof,
    })
}

fn initial_state(l: &Loaded, s: &Setup) -> anyhow::Result<SpectralVectorField> {
    Ok(match &l.cfg.initial {
        InitialConfig::Zero => SpectralVectorField::zeros(&s.grid),
        InitialConfig::TaylorGreen { amplitude } => SpectralVectorField::taylor_green(&s.grid, *amplitude),
        InitialConfig::Random { spectrum, seed, radius } => {
            let u = random_divfree_field(&s.grid, spectrum, *seed)?;
            match radius {
                Some(r) if u.h1_norm() > *r => rescale_h1(&u, *r),
                _ => u,
            }
        }
        InitialConfig::Snapshot { path } => read_snapshot(&l.base.join(path), Some(&s.grid))?.0,
    })
}

fn spin_up_options(cfg: &RunConfig) -> SpinUpOptions {
    let mut o = SpinUpOptions::default();
    if let Some(t) = cfg.run.spin_up_t_max {
        o.t_max = t;
    }
    o
}

/// Initial state, spun up into the absorbing ball when requested; also
/// returns the spin-up time.
fn start_state(l: &Loaded, s: &Setup) -> anyhow::Result<(SpectralVectorField, Option<f64>)> {
    let u0 = initial_state(l, s)?;
    if !l.cfg.run.spin_up {
        return Ok((u0, None));
    }
    let sp = spin_up_to_absorbing(&u0, &s.forcing, &s.solver, s.grashof, &spin_up_options(&l.cfg))?;
    log::info!(
        "spun up at t = {} (|grad u| = {:.4}, bound {:.4})",
        sp.t0,
        sp.final_h1,
        sp.bound
    );
    Ok((sp.state, Some(sp.t0)))
}

fn write_reports<D: Diagnostics>(cfg: &RunConfig, out: &mut Outputs, stem: &str, report: &D) -> anyhow::Result<()> {
    for fmt in &cfg.output.formats {
        let ext = match fmt {
            nudge_nse::io::DiagnosticsFormat::Csv => "csv",
            nudge_nse::io::DiagnosticsFormat::Json => "json",
        };
        write_diagnostics(report, &out.path(&format!("{stem}.{ext}")), *fmt)?;
    }
    Ok(())
}

fn finish(l: &Loaded, out: &mut Outputs, command: &str, summary: Value) -> anyhow::Result<()> {
    write_manifest(out, command, &l.resolved, &l.inputs, &summary)?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

pub fn simulate(a: &RunArgs) -> anyhow::Result<()> {
    let l = load(a)?;
    let s = setup(&l.cfg)?;
    let mut out = Outputs::new(&a.output_dir)?;
    let (u0, t_spin) = start_state(&l, &s)?;
    let traj = integrate(&u0, &s.forcing, &s.solver, l.cfg.run.t_final, l.cfg.run.sample_stride)?;
    write_reports(&l.cfg, &mut out, "norms", &traj.norm_series())?;
    if l.cfg.output.write_snapshots {
        write_trajectory(&out.path("trajectory.nse"), &traj)?;
        write_snapshot(&out.path("final.nse"), traj.last(), traj.time(traj.len() - 1))?;
    }
    let last = traj.last().norms();
    let summary = json!({
        "samples": traj.len(),
        "t_final": traj.time(traj.len() - 1),
        "grashof": s.grashof,
        "spin_up_time": t_spin,
        "final_energy": 0.5 * last.l2 * last.l2,
        "final_enstrophy": 0.5 * last.h1 * last.h1,
    });
    finish(&l, &mut out, "simulate", summary)
}

/// β and the nudging config for observations `v`: ρ defaults to the
/// measured X-norm and β to the advisor's β_min.
fn nudging_config(
    l: &Loaded,
    s: &Setup,
    op: InterpolantOp,
    x_norm: f64,
) -> anyhow::Result<(NudgingConfig, Option<nudge_nse::nudging::ParamAdvice>)> {
    let n = l.cfg.nudging.as_ref().expect("checked by caller");
    let rho = n.rho.unwrap_or(x_norm).max(f64::MIN_POSITIVE);
    let k0 = s.grid.kappa0();
    let (beta, advice) = match n.beta {
        Some(b) => (b, None),
        None => {
            let adv = advise_parameters(s.grashof, rho, &n.constants, k0)?;
            (adv.beta_min, Some(adv))
        }
    };
    Ok((NudgingConfig::new(beta, op, rho, n.constants)?, advice))
}

fn warn_admissibility(ncfg: &NudgingConfig, s: &Setup) -> Value {
    let adm = ncfg.admissibility(s.grashof, s.grid.kappa0());
    if ncfg.no_nudging() {
        log::warn!("beta = 0: no nudging, w solves the plain NSE from zero");
    } else {
        if !adm.condbeta_ok {
            log::warn!(
                "beta = {} is below the sufficient value: rhs {:.4}",
                ncfg.beta,
                adm.condbeta_rhs
            );
        }
        if !adm.condbetah_ok {
            log::warn!(
                "resolution condition fails: beta*kappa0^2*h^2 = {:.4} > c2*",
                adm.condbetah_lhs
            );
        }
    }
    serde_json::to_value(adm).unwrap_or(Value::Null)
}

fn interpolant(l: &Loaded, grid: &TorusGrid, section: &str) -> anyhow::Result<InterpolantOp> {
    let n = l
        .cfg
        .nudging
        .as_ref()
        .ok_or_else(|| config_err("nudging", &format!("the {section} command needs a nudging section")))?;
    Ok(build_interpolant(&InterpolantSpec {
        kind: n.interpolant.clone(),
        grid: grid.clone(),
    })?)
}

pub fn assimilate(a: &RunArgs) -> anyhow::Result<()> {
    let l = load(a)?;
    let s = setup(&l.cfg)?;
    let op = interpolant(&l, &s.grid, "assimilate")?;
    let n = l.cfg.nudging.clone().expect("checked");
    let mut out = Outputs::new(&a.output_dir)?;
    let (truth, t_spin) = match &n.reference {
        Some(r) => (read_trajectory(&l.base.join(r), Some(&s.grid))?, None),
        None => {
            let (u0, t) = start_state(&l, &s)?;
            (
                integrate(&u0, &s.forcing, &s.solver, l.cfg.run.t_final, l.cfg.run.sample_stride)?,
                t,
            )
        }
    };
    let v = observe(&truth, &op, n.noise)?;
    let (ncfg, advice) = nudging_config(&l, &s, op, v.x_norm(s.solver.viscosity_nu))?;
    // A twin without noise runs truth and nudged solution in lockstep, so
    // the observations are exact at every stage.
    let lockstep = n.reference.is_none() && n.noise.is_none();
    let (adm, w) = if lockstep {
        let adm = warn_admissibility(&ncfg, &s);
        let zero = SpectralVectorField::zeros(&s.grid);
        let run = twin_run(
            truth.first(),
            &zero,
            truth.t0(),
            truth.span(),
            l.cfg.run.sample_stride,
            &s.forcing,
            &s.solver,
            &ncfg,
        )?;
        (adm, run.nudged)
    } else {
        let adm = serde_json::to_value(ncfg.admissibility(s.grashof, s.grid.kappa0()))?;
        (adm, solve_wplus(&v, &s.forcing, &s.solver, &ncfg)?)
    };
    let report = sync_report(
        &w,
        &truth,
        &ncfg,
        &SyncOptions {
            viscosity_nu: s.solver.viscosity_nu,
            grashof: s.grashof,
            target: 1e-8,
        },
    )?;
    write_reports(&l.cfg, &mut out, "sync", &report)?;
    let params = json!({
        "beta": ncfg.beta,
        "h": ncfg.h,
        "rho": ncfg.rho,
        "grashof": s.grashof,
        "advice": advice,
        "admissibility": adm,
        "lockstep": lockstep,
    });
    write_json(&params, &out.path("params.json"))?;
    if l.cfg.output.write_snapshots {
        write_trajectory(&out.path("nudged.nse"), &w)?;
        if n.reference.is_none() {
            write_trajectory(&out.path("truth.nse"), &truth)?;
        }
        write_observations(&out.path("observations.nse"), &v)?;
    }
    let summary = json!({
        "samples": w.len(),
        "params": params,
        "spin_up_time": t_spin,
        "initial_grad_err": report.grad_err.first(),
        "final_grad_err": report.grad_err.last(),
        "decay_orders": report.decay_orders,
        "fitted_rate": report.fitted_rate,
        "bound_rate": report.bound_rate,
        "threshold_time": report.threshold_time,
        "no_nudging": report.no_nudging,
    });
    finish(&l, &mut out, "assimilate", summary)
}

/// `n` sample times on [0, t_end], snapped to the sample grid.
fn time_grid(t_end: f64, n: usize, ds: f64) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..n)
        .map(|i| (t_end * i as f64 / (n - 1) as f64 / ds).round() as usize)
        .collect();
    idx.dedup();
    idx.into_iter().map(|k| k as f64 * ds).collect()
}

pub fn ensemble(a: &RunArgs) -> anyhow::Result<()> {
    let l = load(a)?;
    let s = setup(&l.cfg)?;
    let op = interpolant(&l, &s.grid, "ensemble")?;
    let n = l.cfg.nudging.clone().expect("checked");
    let e = l
        .cfg
        .ensemble
        .clone()
        .ok_or_else(|| config_err("ensemble", "the ensemble command needs an ensemble section"))?;
    if n.noise.is_some() {
        return Err(config_err(
            "nudging.noise",
            "noisy observations are not supported by the ensemble command",
        )
        .into());
    }
    if n.reference.is_some() {
        return Err(config_err("nudging.reference", "the ensemble command generates its own truth").into());
    }
    let mut out = Outputs::new(&a.output_dir)?;
    let nu = s.solver.viscosity_nu;
    let k0 = s.grid.kappa0();
    let mut mcfg = MetricConfig::new(nu, k0).with_n_max(l.cfg.metrics.n_max);
    if let Some(w) = l.cfg.metrics.window {
        mcfg.window = w;
    }
    mcfg.validate()?;
    let kind = if e.attractor {
        InitialKind::AttractorAtoms {
            spectrum: e.spectrum,
            radius: e.radius,
            forcing: &s.forcing,
            solver: &s.solver,
            spin_up: spin_up_options(&l.cfg),
        }
    } else {
        InitialKind::GaussianModes {
            spectrum: e.spectrum,
            radius: e.radius,
        }
    };
    let init = sample_initial_measure(&s.grid, &kind, e.n_members, e.seed)?;
    let t_end = e.t_end.unwrap_or(l.cfg.run.t_final);
    let span = t_end + mcfg.span();
    let mu = push_forward_s(&init, &s.forcing, &s.solver, 0.0, span, l.cfg.run.sample_stride)?;
    let x_norm = mu
        .atoms()
        .iter()
        .map(|a| observe(a, &op, None).map(|v: ObservationStream| v.x_norm(nu)))
        .collect::<nudge_nse::Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let (ncfg, advice) = nudging_config(&l, &s, op, x_norm)?;
    let adm = warn_admissibility(&ncfg, &s);
    let pf = push_forward_wj_lockstep(&mu, &s.forcing, &s.solver, &ncfg, None)?;
    let grid_t = time_grid(t_end, e.n_times, mu.dt_sample());
    let report = decay_table(&pf.nudged, &pf.truth, &grid_t, &mcfg, s.grashof, ncfg.beta)?;
    write_reports(&l.cfg, &mut out, "decay", &report)?;
    let params = json!({
        "beta": ncfg.beta,
        "h": ncfg.h,
        "rho": ncfg.rho,
        "grashof": s.grashof,
        "advice": advice,
        "admissibility": adm,
        "metric_window": mcfg.window,
        "n_max": mcfg.n_max,
    });
    write_json(&params, &out.path("params.json"))?;
    if l.cfg.output.write_snapshots {
        write_ensemble(&out.path("ensemble_truth.nse"), &pf.truth)?;
        write_ensemble(&out.path("ensemble_nudged.nse"), &pf.nudged)?;
    }
    let summary = json!({
        "n_members": mu.n_atoms(),
        "params": params,
        "transport_mode": report.mode,
        "tail_bound": report.tail_bound,
        "bound_rate": report.bound_rate,
        "gamma_hat_first": report.rows.first().map(|r| r.gamma_hat),
        "gamma_hat_last": report.rows.last().map(|r| r.gamma_hat),
    });
    finish(&l, &mut out, "ensemble", summary)
}

pub fn params(a: &ParamsArgs) -> anyhow::Result<()> {
    let constants: NudgingConstants = match &a.constants {
        Some(s) => serde_json::from_str(s).map_err(|e| config_err("constants", &e.to_string()))?,
        None => NudgingConstants::default(),
    };
    let advice = advise_parameters(a.grashof, a.rho, &constants, a.kappa0)?;
    let beta = a.beta.unwrap_or(advice.beta_min);
    let rhs = condbeta_rhs(beta, a.grashof, a.rho, &constants);
    let check = json!({
        "beta": beta,
        "condbeta_rhs": rhs,
        "condbeta_ok": beta >= rhs,
        "h": a.h,
        "condbetah_lhs": a.h.map(|h| beta * a.kappa0 * a.kappa0 * h * h),
        "condbetah_ok": a.h.map(|h| beta * a.kappa0 * a.kappa0 * h * h <= constants.c2_star),
    });
    let floors = rho_floors(a.grashof, a.c_tilde1, Some(beta), &constants);
    let out = json!({
        "advice": advice,
        "check": check,
        "rho_floors": floors,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

pub fn info(a: &InfoArgs) -> anyhow::Result<()> {
    let out = match &a.path {
        Some(p) => {
            let (h, fields) = read_container(p, None).with_context(|| format!("reading {}", p.display()))?;
            let h1: Vec<f64> = fields.iter().map(|f| f.h1_norm()).collect();
            json!({
                "path": p.display().to_string(),
                "version": h.version,
                "kind": format!("{:?}", h.kind),
                "n_modes": h.n_modes,
                "period_l": h.period_l,
                "time": h.time,
                "dt_sample": h.dt_sample,
                "field_count": h.field_count,
                "atom_count": h.atom_count,
                "flags": h.flags,
                "provenance": h.provenance,
                "shift": h.shift,
                "first_h1": h1.first(),
                "last_h1": h1.last(),
                "max_h1": h1.iter().cloned().fold(0.0, f64::max),
            })
        }
        None => json!({
            "tool": "nudge-nse",
            "version": env!("CARGO_PKG_VERSION"),
            "snapshot_format_version": nudge_nse::io::FORMAT_VERSION,
            "threads": rayon::current_num_threads(),
            "default_constants": NudgingConstants::default(),
        }),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
