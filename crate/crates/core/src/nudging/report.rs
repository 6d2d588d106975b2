use serde::{Deserialize, Serialize};

use super::config::NudgingConfig;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

/// Inputs of [`sync_report`] beyond the two trajectories.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncOptions {
    pub viscosity_nu: f64,
    /// Grashof number of the forcing, used for the reference envelope.
    pub grashof: f64,
    /// Relative decay ‖∇(w−u)(t)‖/‖∇(w−u)(t₀)‖ defining `threshold_time`.
    pub target: f64,
}

/// Synchronization diagnostics of a nudged solution w against the truth u.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyncReport {
    pub times: Vec<f64>,
    pub grad_err: Vec<f64>,
    pub l2_err: Vec<f64>,
    /// √2·νκ₀G·e^{−βνκ₀²(t−t₀)/4}.
    pub envelope: Vec<f64>,
    /// Exponential rate of grad_err (1/time) on the fit segment; None when
    /// the error never decays measurably.
    pub fitted_rate: Option<f64>,
    /// βνκ₀²/2, the rate of the squared error.
    pub predicted_rate: f64,
    /// βνκ₀²/4, the guaranteed rate of grad_err itself.
    pub bound_rate: f64,
    pub threshold_time: Option<f64>,
    /// Sample index range [start, end] used for the fit.
    pub fit_segment: Option<(usize, usize)>,
    /// Orders of magnitude between the initial and the smallest error.
    pub decay_orders: f64,
    pub no_nudging: bool,
}

/// Relative floor below which differences are treated as round-off.
const ROUNDOFF: f64 = 1e-13;

/// Fit segment of a decaying series: from the first sample after the peak
/// that is ten times below it, to the last sample before the series first
/// reaches `10·floor`.
fn fit_segment(e: &[f64], floor: f64) -> Option<(usize, usize)> {
    let (peak, &emax) = e
        .iter()
        .enumerate()
        .fold((0, &0.0), |acc, x| if *x.1 > *acc.1 { x } else { acc });
    if !(emax > floor * 10.0) {
        return None;
    }
    let stop = e[peak..]
        .iter()
        .position(|&x| x <= 10.0 * floor)
        .map(|i| peak + i)
        .unwrap_or(e.len());
    let end = stop.checked_sub(1)?;
    let start = (peak..=end).find(|&i| e[i] <= 0.1 * emax).unwrap_or(peak);
    let start = if end >= start + 2 { start } else { peak };
    (end > start).then_some((start, end))
}

/// Least-squares slope of ln y against t.
fn log_slope(t: &[f64], y: &[f64]) -> f64 {
    let n = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let tm = t.iter().sum::<f64>() / n;
    let lm = ly.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in t.iter().zip(&ly) {
        sxy += (a - tm) * (b - lm);
        sxx += (a - tm) * (a - tm);
    }
    sxy / sxx
}

pub fn sync_report(w: &Trajectory, u: &Trajectory, ncfg: &NudgingConfig, opts: &SyncOptions) -> Result<SyncReport> {
    w.check_aligned(u)?;
    let k0 = w.grid().kappa0();
    let nu = opts.viscosity_nu;
    let gamma = ncfg.beta * nu * k0 * k0;
    let times = w.times();
    let (mut grad_err, mut l2_err) = (Vec::with_capacity(w.len()), Vec::with_capacity(w.len()));
    let mut sup_u = 0.0f64;
    for (a, b) in w.states().iter().zip(u.states()) {
        let n = a.sub(b)?.norms();
        grad_err.push(n.h1);
        l2_err.push(n.l2);
        sup_u = sup_u.max(b.h1_norm());
    }
    let t0 = w.t0();
    let envelope = times
        .iter()
        .map(|t| 2f64.sqrt() * nu * k0 * opts.grashof * (-gamma * (t - t0) / 4.0).exp())
        .collect();
    let floor = ROUNDOFF * sup_u.max(grad_err[0]);
    let seg = fit_segment(&grad_err, floor);
    let fitted_rate = seg.map(|(a, b)| -log_slope(&times[a..=b], &grad_err[a..=b]));
    let e0 = grad_err[0];
    let threshold_time = if e0 > 0.0 {
        grad_err.iter().position(|&e| e <= opts.target * e0).map(|i| times[i])
    } else {
        None
    };
    let emin = grad_err.iter().cloned().fold(f64::INFINITY, f64::min);
    let decay_orders = if e0 > 0.0 {
        if emin > 0.0 {
            (e0 / emin).log10()
        } else {
            f64::INFINITY
        }
    } else {
        0.0
    };
    Ok(SyncReport {
        times,
        grad_err,
        l2_err,
        envelope,
        fitted_rate,
        predicted_rate: gamma / 2.0,
        bound_rate: gamma / 4.0,
        threshold_time,
        fit_segment: seg,
        decay_orders,
        no_nudging: ncfg.no_nudging(),
    })
}

/// Discrete ‖u‖_Y: sup_s ‖∇u(s)‖²/(νκ₀)² plus the sup over sliding windows
/// [s, s + (νκ₀²)⁻¹] (s on the sample grid) of (νκ₀²)⁻¹∫‖Au‖², by the
/// trapezoid rule with a linearly interpolated partial last interval.
pub fn y_norm(traj: &Trajectory, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::InvalidArgument(format!("viscosity must be positive (got {nu})")));
    }
    let k0 = traj.grid().kappa0();
    let window = 1.0 / (nu * k0 * k0);
    let ds = traj.dt_sample();
    if traj.span() < window * (1.0 - 1e-9) {
        return Err(Error::InsufficientSpan(format!(
            "trajectory span {} is shorter than one averaging window {window}",
            traj.span()
        )));
    }
    let (mut sup1, mut h2sq) = (0.0f64, Vec::with_capacity(traj.len()));
    for s in traj.states() {
        let n = s.norms();
        sup1 = sup1.max(n.h1 * n.h1);
        h2sq.push(n.h2 * n.h2);
    }
    let steps = window / ds;
    let m = (steps - 1e-9).floor().max(0.0) as usize;
    let frac = (steps - m as f64).max(0.0);
    let frac = if frac < 1e-9 { 0.0 } else { frac };
    let mut sup2 = 0.0f64;
    let mut start = 0;
    loop {
        let last = start + m + usize::from(frac > 0.0);
        if last >= h2sq.len() {
            break;
        }
        let mut integral = 0.0;
        for i in start..start + m {
            integral += 0.5 * ds * (h2sq[i] + h2sq[i + 1]);
        }
        if frac > 0.0 {
            let a = h2sq[start + m];
            let b = h2sq[start + m + 1];
            let mid = a + frac * (b - a);
            integral += 0.5 * frac * ds * (a + mid);
        }
        sup2 = sup2.max(integral * nu * k0 * k0 / (nu * k0 * k0).powi(2));
        start += 1;
    }
    Ok((sup1 / (nu * k0).powi(2) + sup2).sqrt())
}
