use std::f64::consts::PI;

use nudge_nse::dynamics::{
    absorbing_bounds, integrate, integrate_from, spin_up_to_absorbing, Forcing, Integrator, SolverConfig, SpinUpOptions,
};
use nudge_nse::spectral::{make_grid, random_divfree_field, rescale_h1, EnergySpectrum, SpectralVectorField};
use nudge_nse::Error;

#[test]
fn taylor_green_matches_exact_decay_with_both_integrators() {
    let g = make_grid(32, 2.0 * PI).unwrap();
    let nu = 0.1;
    let u0 = SpectralVectorField::taylor_green(&g, 1.0);
    let f = Forcing::zero(&g);
    for (integ, tol) in [(Integrator::IfRk2, 1e-12), (Integrator::ImexEuler, 2e-4)] {
        let cfg = SolverConfig::new(nu, 1e-3).with_integrator(integ);
        let tr = integrate(&u0, &f, &cfg, 1.0, 100).unwrap();
        for i in 0..tr.len() {
            let exact = u0.scale((-2.0 * nu * tr.time(i)).exp());
            let e = tr.state(i).sub(&exact).unwrap().l2_norm() / exact.l2_norm();
            assert!(e <= tol, "{integ:?} t = {}: {e:e}", tr.time(i));
        }
    }
}

#[test]
fn sample_count_and_labels_follow_the_stride() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let u0 = SpectralVectorField::taylor_green(&g, 1.0);
    let f = Forcing::zero(&g);
    let cfg = SolverConfig::new(0.1, 0.01);
    let tr = integrate_from(&u0, 2.0, &f, &cfg, 1.0, 7).unwrap();
    // 100 steps, stride 7: floor(100/7) + 1 samples.
    assert_eq!(tr.len(), 15);
    assert_eq!(tr.t0(), 2.0);
    assert!((tr.dt_sample() - 0.07).abs() < 1e-15);
    assert!((tr.time(14) - 2.98).abs() < 1e-12);
}

#[test]
fn unforced_energy_decays_monotonically_and_runs_are_deterministic() {
    let g = make_grid(32, 2.0 * PI).unwrap();
    let u0 = rescale_h1(
        &random_divfree_field(&g, &EnergySpectrum::power_law(1.0, 1.0, 1, 8), 4).unwrap(),
        10.0,
    );
    let f = Forcing::zero(&g);
    let cfg = SolverConfig::new(0.05, 2e-3);
    let a = integrate(&u0, &f, &cfg, 1.0, 10).unwrap();
    let b = integrate(&u0, &f, &cfg, 1.0, 10).unwrap();
    assert_eq!(a.states(), b.states());
    let e: Vec<f64> = a.states().iter().map(|s| s.l2_norm()).collect();
    for w in e.windows(2) {
        assert!(w[1] < w[0]);
    }
    // Energy equality: d/dt ½‖u‖² = −ν‖∇u‖², integrated by the trapezoid rule.
    let ns = a.norm_series();
    let mut dissipated = 0.0;
    for i in 1..ns.t.len() {
        let dt = ns.t[i] - ns.t[i - 1];
        dissipated += 0.05 * 0.5 * dt * (ns.norms[i].h1.powi(2) + ns.norms[i - 1].h1.powi(2));
    }
    let lost = 0.5 * (ns.norms[0].l2.powi(2) - ns.norms.last().unwrap().l2.powi(2));
    assert!((lost - dissipated).abs() < 1e-3 * lost, "{lost} vs {dissipated}");
}

#[test]
fn huge_time_step_is_reported_as_blow_up() {
    let g = make_grid(32, 2.0 * PI).unwrap();
    let u0 = rescale_h1(
        &random_divfree_field(&g, &EnergySpectrum::power_law(1.0, 0.0, 1, 10), 1).unwrap(),
        500.0,
    );
    let f = Forcing::zero(&g);
    let cfg = SolverConfig::new(1e-3, 0.5);
    match integrate(&u0, &f, &cfg, 50.0, 1) {
        Err(Error::BlowUp { .. }) => {}
        other => panic!("expected blow-up, got {:?}", other.map(|t| t.len())),
    }
}

#[test]
fn invalid_solver_settings_are_rejected() {
    let g = make_grid(16, 2.0 * PI).unwrap();
    let u0 = SpectralVectorField::zeros(&g);
    let f = Forcing::zero(&g);
    assert!(integrate(&u0, &f, &SolverConfig::new(0.0, 1e-3), 1.0, 1).is_err());
    assert!(integrate(&u0, &f, &SolverConfig::new(0.1, -1e-3), 1.0, 1).is_err());
    assert!(integrate(&u0, &f, &SolverConfig::new(0.1, 1e-3), 1.0, 0).is_err());
}

#[test]
fn forcing_is_scaled_to_the_requested_grashof_number() {
    let g = make_grid(32, 2.0 * PI).unwrap();
    let f = Forcing::random_shells(&g, 2, 4, 7.5, 0.3, 9).unwrap();
    assert!((f.grashof(0.3) - 7.5).abs() < 1e-12);
    assert!(f.field().check_div_free(1e-12));
}

#[test]
fn spin_up_enters_the_absorbing_ball() {
    let g = make_grid(32, 2.0 * PI).unwrap();
    let nu = 1.0;
    let f = Forcing::random_shells(&g, 3, 4, 5.0, nu, 7).unwrap();
    let u0 = rescale_h1(
        &random_divfree_field(&g, &EnergySpectrum::power_law(1.0, 1.0, 1, 8), 2).unwrap(),
        30.0,
    );
    let cfg = SolverConfig::new(nu, 2e-3);
    let s = spin_up_to_absorbing(&u0, &f, &cfg, 5.0, &SpinUpOptions::default()).unwrap();
    let bound = absorbing_bounds(5.0, nu, 1.0, 1.0).h1_bound;
    assert!((bound - 2f64.sqrt() * 5.0).abs() < 1e-12);
    assert!(s.final_h1 <= bound && s.state.h1_norm() <= bound);
    assert!(s.t0 >= 1.0);

    let short = SpinUpOptions {
        window: None,
        t_max: 0.01,
    };
    assert!(matches!(
        spin_up_to_absorbing(&u0, &f, &cfg, 5.0, &short),
        Err(Error::SpinUpTimeout { .. })
    ));
}
