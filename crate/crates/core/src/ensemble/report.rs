use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use super::measure::{check_pair, kantorovich, push_forward_wj, shift_measure, EmpiricalMeasure, Ground};
use super::metrics::{d_plus_from_series, MetricConfig};
use super::transport::{transport, TransportMode};
use crate::dynamics::{Forcing, SolverConfig};
use crate::error::Result;
use crate::interpolants::InterpolantOp;
use crate::nudging::NudgingConfig;

/// One row of a decay table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: f64,
    /// Kantorovich distance over d₀⁺ between τ_t of the two measures.
    pub gamma_hat: f64,
    /// Mean d₀⁺ over member pairs (identity coupling).
    pub paired_bound: f64,
    /// √2·νκ₀G·e^{−βνκ₀²t/4}.
    pub envelope: f64,
    /// Kantorovich distance over ‖·‖ between the evaluations at t.
    pub gamma_eval: f64,
    pub paired_eval: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub mode: TransportMode,
    pub n_atoms: usize,
    /// βνκ₀²/4.
    pub bound_rate: f64,
    /// Truncation error bound of d₀⁺.
    pub tail_bound: f64,
}

/// ‖aᵢ(s) − bⱼ(s)‖ for every member pair over the common samples.
fn pair_series(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = a.n_samples().min(b.n_samples());
    a.atoms()
        .par_iter()
        .map(|x| {
            b.atoms()
                .iter()
                .map(|y| {
                    x.states()[..n]
                        .iter()
                        .zip(&y.states()[..n])
                        .map(|(p, q)| Ok(p.sub(q)?.l2_norm()))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// Γ̂_H(τ_t a, τ_t b) and γ̂_H(ℰ_t a, ℰ_t b) on `t_grid`, with paired
/// upper bounds and the envelope at (G, β). The pairwise difference series
/// are computed once; every shift reads a suffix of them.
pub fn decay_table(
    a: &EmpiricalMeasure,
    b: &EmpiricalMeasure,
    t_grid: &[f64],
    mcfg: &MetricConfig,
    grashof: f64,
    beta: f64,
) -> Result<DecayReport> {
    check_pair(a, b)?;
    let nu = mcfg.viscosity_nu;
    let k0 = a.grid().kappa0();
    let ds = a.dt_sample();
    let series = pair_series(a, b)?;
    let n = a.n_atoms();
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut mode = TransportMode::ExactAssignment;
    for &t in t_grid {
        let k = a.atom(0).offset_index(t)?;
        b.atom(0).offset_index(t)?;
        let cost = series
            .par_iter()
            .map(|row| {
                row.iter()
                    .map(|d| d_plus_from_series(&d[k..], ds, nu, mcfg))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let eval: Vec<Vec<f64>> = series.iter().map(|row| row.iter().map(|d| d[k]).collect()).collect();
        let g = transport(&cost)?;
        let e = transport(&eval)?;
        if g.mode == TransportMode::Entropic {
            mode = TransportMode::Entropic;
        }
        rows.push(DecayRow {
            t,
            gamma_hat: g.distance,
            paired_bound: (0..n).map(|i| cost[i][i]).sum::<f64>() / n as f64,
            envelope: 2f64.sqrt() * nu * k0 * grashof * (-beta * nu * k0 * k0 * t / 4.0).exp(),
            gamma_eval: e.distance,
            paired_eval: (0..n).map(|i| eval[i][i]).sum::<f64>() / n as f64,
        });
    }
    Ok(DecayReport {
        rows,
        mode,
        n_atoms: n,
        bound_rate: beta * nu * k0 * k0 / 4.0,
        tail_bound: mcfg.tail_bound(),
    })
}

/// Decay of (τ_t ∘ W₊ ∘ 𝒥)μ toward τ_t μ, with W₊ solved from the sampled
/// observation streams.
pub fn decay_report(
    mu: &EmpiricalMeasure,
    op: &InterpolantOp,
    f: &Forcing,
    cfg: &SolverConfig,
    ncfg: &NudgingConfig,
    t_grid: &[f64],
    mcfg: &MetricConfig,
) -> Result<DecayReport> {
    let wj = push_forward_wj(mu, op, f, cfg, ncfg)?;
    decay_table(&wj, mu, t_grid, mcfg, f.grashof(cfg.viscosity_nu), ncfg.beta)
}

/// Both sides of the transfer inequalities at time t:
/// Γ̂(τ_t W₊Jμ, τ_t W₊Jη) ≤ (8β)^{1/2}·Γ̂(τ_t Jμ, τ_t Jη) and
/// γ̂(ℰ_t W₊Jμ, ℰ_t W₊Jη) ≤ (8β)^{1/2}ν(1+2ρ)·Γ̂(τ_t Jμ, τ_t Jη).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferCheck {
    pub t: f64,
    pub gamma_outputs: f64,
    pub gamma_eval_outputs: f64,
    pub gamma_observations: f64,
    pub factor: f64,
    pub eval_factor: f64,
}

impl TransferCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.gamma_outputs <= (1.0 + slack) * self.factor * self.gamma_observations
            && self.gamma_eval_outputs <= (1.0 + slack) * self.eval_factor * self.gamma_observations
    }
}

/// `w_mu`, `w_eta` are W₊ outputs for the observation measures `j_mu`,
/// `j_eta`; all four are shifted by `t`.
#[allow(clippy::too_many_arguments)]
pub fn transfer_check(
    w_mu: &EmpiricalMeasure,
    w_eta: &EmpiricalMeasure,
    j_mu: &EmpiricalMeasure,
    j_eta: &EmpiricalMeasure,
    t: f64,
    beta: f64,
    rho: f64,
    mcfg: &MetricConfig,
) -> Result<TransferCheck> {
    let factor = (8.0 * beta).sqrt();
    let [wm, we, jm, je] = [w_mu, w_eta, j_mu, j_eta].map(|m| shift_measure(m, t));
    let (wm, we, jm, je) = (wm?, we?, jm?, je?);
    Ok(TransferCheck {
        t,
        gamma_outputs: kantorovich(&wm, &we, Ground::D0Plus, mcfg)?.distance,
        gamma_eval_outputs: kantorovich(&wm, &we, Ground::L2State, mcfg)?.distance,
        gamma_observations: kantorovich(&jm, &je, Ground::D0Plus, mcfg)?.distance,
        factor,
        eval_factor: factor * mcfg.viscosity_nu * (1.0 + 2.0 * rho),
    })
}
