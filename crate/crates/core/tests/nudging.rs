use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use nudge_nse::dynamics::{integrate, Forcing, SolverConfig, Trajectory};
use nudge_nse::interpolants::{build_interpolant, InterpolantOp, InterpolantSpec};
use nudge_nse::nudging::{
    advise_parameters, condbeta_rhs, default_burn_in, observe, rho_floors, solve_linearized, solve_linearized_pair,
    solve_nudged_from, solve_wplus, sync_report, twin_run, y_norm, NoiseSpec, NudgingConfig, NudgingConstants,
    ObservationStream, SyncOptions,
};
use nudge_nse::spectral::{
    make_grid, random_divfree_field, rescale_h1, EnergySpectrum, SpectralVectorField, TorusGrid,
};
use nudge_nse::Error;

struct Setup {
    grid: TorusGrid,
    f: Forcing,
    cfg: SolverConfig,
    op: InterpolantOp,
}

fn setup() -> Setup {
    let grid = make_grid(16, 2.0 * PI).unwrap();
    let f = Forcing::random_shells(&grid, 2, 3, 4.0, 1.0, 5).unwrap();
    let op = build_interpolant(&InterpolantSpec::modal(&grid, 4)).unwrap();
    Setup {
        grid,
        f,
        cfg: SolverConfig::new(1.0, 5e-3),
        op,
    }
}

fn initial(s: &Setup, seed: u64) -> SpectralVectorField {
    rescale_h1(
        &random_divfree_field(&s.grid, &EnergySpectrum::power_law(1.0, 1.0, 1, 5), seed).unwrap(),
        4.0,
    )
}

fn truth(s: &Setup, seed: u64, t: f64) -> Trajectory {
    integrate(&initial(s, seed), &s.f, &s.cfg, t, 4).unwrap()
}

fn ncfg(s: &Setup, beta: f64) -> NudgingConfig {
    NudgingConfig::new(beta, s.op.clone(), 10.0, NudgingConstants::default()).unwrap()
}

#[test]
fn advisor_returns_the_smallest_admissible_beta() {
    let c = NudgingConstants::default();
    for (g, rho) in [(1.0, 1.0), (10.0, 3.0), (50.0, 20.0)] {
        let a = advise_parameters(g, rho, &c, 1.0).unwrap();
        let b = a.beta_min;
        assert!(b >= condbeta_rhs(b, g, rho, &c));
        let below = b * (1.0 - 1e-5);
        assert!(below < condbeta_rhs(below, g, rho, &c) || a.vacuous);
        assert!((a.h_max - (1.0 / b).sqrt()).abs() < 1e-12 * a.h_max);
    }
    // Condition rhs: X log X with X = c₁*(G²/β + ρ²).
    let x = 100.0 / 50.0 + 9.0;
    assert!((condbeta_rhs(50.0, 10.0, 3.0, &c) - x * f64::ln(x)).abs() < 1e-12);
    assert!(advise_parameters(1e7, 1e7, &c, 1.0).is_err());
    assert!(advise_parameters(1.0, 0.0, &c, 1.0).is_err());
}

#[test]
fn rho_floors_match_their_formulas() {
    let c = NudgingConstants {
        c_l: 0.5,
        c3_star: 2.0,
        ..Default::default()
    };
    let r = rho_floors(4.0, 0.25, Some(9.0), &c);
    assert!((r.attractor_type1 - 5.0).abs() < 1e-12);
    assert!((r.absorbing_type1 - 5.0 * 2f64.sqrt()).abs() < 1e-12);
    let t2 = 2.0 * (4.0 + 8f64.powi(3) / 3.0);
    assert!((r.absorbing_type2.unwrap() - t2).abs() < 1e-9);
    assert!(rho_floors(4.0, 0.25, None, &c).absorbing_type2.is_none());
}

#[test]
fn sync_report_of_identical_trajectories_is_zero() {
    let s = setup();
    let u = truth(&s, 1, 1.0);
    let r = sync_report(
        &u,
        &u,
        &ncfg(&s, 5.0),
        &SyncOptions {
            viscosity_nu: 1.0,
            grashof: 4.0,
            target: 1e-8,
        },
    )
    .unwrap();
    assert!(r.grad_err.iter().all(|&e| e == 0.0));
    assert!(r.fitted_rate.is_none());
    assert_eq!(r.decay_orders, 0.0);
    assert!((r.bound_rate - 1.25).abs() < 1e-12);
    assert!((r.predicted_rate - 2.5).abs() < 1e-12);
    assert!((r.envelope[0] - 4.0 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn twin_synchronizes_and_l2_error_obeys_poincare() {
    let s = setup();
    let u0 = initial(&s, 2);
    let u = integrate(&u0, &s.f, &s.cfg, 3.0, 4).unwrap();
    let n = ncfg(&s, 20.0);
    let run = twin_run(&u0, &SpectralVectorField::zeros(&s.grid), 0.0, 3.0, 4, &s.f, &s.cfg, &n).unwrap();
    // The truth follows exactly the arithmetic of a plain integration.
    assert_eq!(run.truth.states(), u.states());
    let r = sync_report(
        &run.nudged,
        &run.truth,
        &n,
        &SyncOptions {
            viscosity_nu: 1.0,
            grashof: 4.0,
            target: 1e-8,
        },
    )
    .unwrap();
    assert!(r.decay_orders >= 8.0, "{}", r.decay_orders);
    assert!(r.fitted_rate.unwrap() >= r.bound_rate);
    for (l2, h1) in r.l2_err.iter().zip(&r.grad_err) {
        assert!(l2 <= &(h1 * (1.0 + 1e-12)));
    }
    assert!(r.threshold_time.is_some());
}

#[test]
fn stream_solver_tracks_the_lockstep_twin() {
    let s = setup();
    let u = truth(&s, 3, 1.0);
    let n = ncfg(&s, 20.0);
    let v = observe(&u, &s.op, None).unwrap();
    let w = solve_wplus(&v, &s.f, &s.cfg, &n).unwrap();
    let run = twin_run(
        u.first(),
        &SpectralVectorField::zeros(&s.grid),
        0.0,
        1.0,
        4,
        &s.f,
        &s.cfg,
        &n,
    )
    .unwrap();
    let scale = u.states().iter().map(|x| x.h1_norm()).fold(0.0, f64::max);
    for (a, b) in w.states().iter().zip(run.nudged.states()) {
        assert!(a.sub(b).unwrap().h1_norm() < 5e-2 * scale);
    }
    assert!(w.first().h1_norm() == 0.0);
}

#[test]
fn zero_beta_reduces_to_the_plain_equation() {
    let s = setup();
    let u = truth(&s, 4, 0.5);
    let n = ncfg(&s, 0.0);
    assert!(n.no_nudging());
    let v = observe(&u, &s.op, None).unwrap();
    let w = solve_wplus(&v, &s.f, &s.cfg, &n).unwrap();
    let plain = integrate(&SpectralVectorField::zeros(&s.grid), &s.f, &s.cfg, 0.5, 4).unwrap();
    for (a, b) in w.states().iter().zip(plain.states()) {
        assert!(a.sub(b).unwrap().l2_norm() <= 1e-12 * b.l2_norm().max(1e-300));
    }
}

#[test]
fn linearization_is_linear_in_the_direction() {
    let s = setup();
    let n = ncfg(&s, 10.0);
    let v = observe(&truth(&s, 5, 1.0), &s.op, None).unwrap();
    let vbar = observe(&truth(&s, 6, 1.0), &s.op, None).unwrap();
    let d1 = solve_linearized(&v, &vbar, &s.f, &s.cfg, &n).unwrap();
    let d2 = solve_linearized(&v, &vbar.scale(-2.5), &s.f, &s.cfg, &n).unwrap();
    for (a, b) in d1.states().iter().zip(d2.states()) {
        assert!(b.lincomb(1.0, a, 2.5).unwrap().l2_norm() <= 1e-10 * a.l2_norm().max(1e-300));
    }
    let zero = ObservationStream::zeros(&s.grid, v.t0(), v.dt_sample(), v.len()).unwrap();
    let d0 = solve_linearized(&v, &zero, &s.f, &s.cfg, &n).unwrap();
    assert!(d0.states().iter().all(|x| x.l2_norm() == 0.0));
    let (w, _) = solve_linearized_pair(&v, &vbar, &s.f, &s.cfg, &n).unwrap();
    assert_eq!(w.states(), solve_wplus(&v, &s.f, &s.cfg, &n).unwrap().states());
}

#[test]
fn frechet_residual_is_second_order() {
    let s = setup();
    let n = ncfg(&s, 10.0);
    let v = observe(&truth(&s, 7, 1.5), &s.op, None).unwrap();
    let vbar = observe(&truth(&s, 8, 1.5), &s.op, None).unwrap();
    let (w, dw) = solve_linearized_pair(&v, &vbar, &s.f, &s.cfg, &n).unwrap();
    let res: Vec<f64> = [1e-1, 1e-2]
        .iter()
        .map(|&e| {
            let we = solve_wplus(&v.lincomb(1.0, &vbar, e).unwrap(), &s.f, &s.cfg, &n).unwrap();
            let lin = Trajectory::new(
                &s.grid,
                0.0,
                dw.dt_sample(),
                dw.states().iter().map(|x| x.scale(e)).collect(),
            )
            .unwrap();
            y_norm(&we.sub(&w).unwrap().sub(&lin).unwrap(), 1.0).unwrap()
        })
        .collect();
    let slope = (res[0] / res[1]).log10();
    assert!((slope - 2.0).abs() < 0.2, "{slope}");
}

#[test]
fn y_norm_of_a_decaying_mode_matches_the_closed_form() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let nu = 0.5;
    let phi = SpectralVectorField::single_mode(&g, 0, 2, [Complex64::new(1.0, 0.0), Complex64::default()]).unwrap();
    let q = 4.0;
    let lam = 0.7;
    let ds = 1e-3;
    let states: Vec<_> = (0..=4000).map(|i| phi.scale((-lam * i as f64 * ds).exp())).collect();
    let tr = Trajectory::new(&g, 0.0, ds, states).unwrap();
    let a2 = phi.l2_norm().powi(2);
    let win = 1.0 / nu;
    let sup1 = q * a2 / (nu * nu);
    let sup2 = q * q * a2 * (1.0 - (-2.0 * lam * win).exp()) / (2.0 * lam) / nu;
    let exact = (sup1 + sup2).sqrt();
    let y = y_norm(&tr, nu).unwrap();
    assert!((y - exact).abs() < 1e-6 * exact, "{y} vs {exact}");

    let short = Trajectory::new(&g, 0.0, ds, tr.states()[..100].to_vec()).unwrap();
    assert!(matches!(y_norm(&short, nu), Err(Error::InsufficientSpan(_))));
}

#[test]
fn explicit_nudging_limit_is_enforced_for_non_modal_operators() {
    let s = setup();
    let va = build_interpolant(&InterpolantSpec::volume_avg(&s.grid, 2.0 * PI / 4.0)).unwrap();
    let n = NudgingConfig::new(200.0, va, 10.0, NudgingConstants::default()).unwrap();
    let u = truth(&s, 9, 0.1);
    let v = observe(&u, &n.interpolant, None).unwrap();
    assert!(solve_wplus(&v, &s.f, &s.cfg, &n).is_err());
    let ok = n.with_beta(50.0).unwrap();
    assert!(solve_wplus(&v, &s.f, &s.cfg, &ok).is_ok());
}

#[test]
fn nudged_solution_forgets_its_initial_state() {
    let s = setup();
    let n = ncfg(&s, 20.0);
    let v = observe(&truth(&s, 10, 2.0), &s.op, None).unwrap();
    let w0 = rescale_h1(
        &random_divfree_field(&s.grid, &EnergySpectrum::power_law(1.0, 1.0, 1, 5), 99).unwrap(),
        3.0,
    );
    let a = solve_wplus(&v, &s.f, &s.cfg, &n).unwrap();
    let b = solve_nudged_from(&w0, &v, &s.f, &s.cfg, &n).unwrap();
    let d0 = a.first().sub(b.first()).unwrap().h1_norm();
    let d1 = a.last().sub(b.last()).unwrap().h1_norm();
    assert!(d1 < 1e-6 * d0);
    assert!((default_burn_in(20.0, 1.0, 1.0) - 4.0 * 1e12f64.ln() / 20.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn noisy_observations_are_reproducible_and_sized(seed in any::<u64>(), mag in 0.01f64..1.0) {
        let s = setup();
        let u = truth(&s, 11, 0.2);
        let noise = NoiseSpec { magnitude: mag, seed };
        let a = observe(&u, &s.op, Some(noise)).unwrap();
        let b = observe(&u, &s.op, Some(noise)).unwrap();
        let clean = observe(&u, &s.op, None).unwrap();
        prop_assert_eq!(a.values(), b.values());
        for (x, c) in a.values().iter().zip(clean.values()) {
            let e = x.sub(c).unwrap().l2_norm();
            prop_assert!((e - mag).abs() <= 1e-10 * mag);
        }
    }
}
