use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use nudge_nse::spectral::{
    bilinear_b, dealias, is_band_limited, leray_project, make_grid, random_divfree_field, random_vector_field,
    rescale_h1, stokes_apply, EnergySpectrum, PhysicalVectorField, SpectralVectorField, TorusGrid,
};

fn grid() -> TorusGrid {
    make_grid(32, 2.0 * PI).unwrap()
}

fn spectrum(exp: f64, top: u32) -> EnergySpectrum {
    EnergySpectrum::power_law(1.0, exp, 1, top)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn leray_is_an_idempotent_divergence_free_projection(seed in any::<u64>(), top in 1u32..8) {
        let w = random_vector_field(&grid(), &spectrum(1.0, top), seed).unwrap();
        let p = leray_project(&w);
        prop_assert!(p.max_relative_divergence() < 1e-12);
        let pp = leray_project(&p);
        prop_assert!(pp.sub(&p).unwrap().l2_norm() <= 1e-13 * p.l2_norm().max(1e-300));
        // P is orthogonal: (w − Pw) ⟂ Pw.
        let r = w.sub(&p).unwrap();
        prop_assert!(r.inner(&p).unwrap().abs() <= 1e-12 * w.l2_norm().powi(2));
    }

    #[test]
    fn nonlinear_term_is_orthogonal_to_u_and_au(seed in any::<u64>(), top in 1u32..6) {
        let u = random_divfree_field(&grid(), &spectrum(2.0, top), seed).unwrap();
        let b = bilinear_b(&u, &u).unwrap();
        let au = stokes_apply(&u);
        let bn = b.l2_norm();
        prop_assert!(b.inner(&u).unwrap().abs() <= 1e-10 * bn * u.l2_norm());
        prop_assert!(b.inner(&au).unwrap().abs() <= 1e-10 * bn * au.l2_norm());
    }

    #[test]
    fn trilinear_form_is_antisymmetric(s1 in any::<u64>(), s2 in any::<u64>(), s3 in any::<u64>()) {
        let g = grid();
        let sp = spectrum(1.0, 4);
        let u = random_divfree_field(&g, &sp, s1).unwrap();
        let v = random_divfree_field(&g, &sp, s2).unwrap();
        let w = random_divfree_field(&g, &sp, s3).unwrap();
        let a = bilinear_b(&u, &v).unwrap().inner(&w).unwrap();
        let b = bilinear_b(&u, &w).unwrap().inner(&v).unwrap();
        let scale = u.h1_norm() * v.h1_norm() * w.h1_norm();
        prop_assert!((a + b).abs() <= 1e-10 * scale);
    }

    #[test]
    fn physical_round_trip_is_exact(seed in any::<u64>()) {
        let u = random_vector_field(&grid(), &spectrum(1.0, 7), seed).unwrap();
        let back = u.to_physical().to_spectral();
        prop_assert!(back.sub(&u).unwrap().l2_norm() <= 1e-13 * u.l2_norm());
        prop_assert!(back.satisfies_invariants());
    }

    #[test]
    fn norms_obey_poincare(seed in any::<u64>(), top in 1u32..8) {
        let u = random_divfree_field(&grid(), &spectrum(1.0, top), seed).unwrap();
        let n = u.norms();
        let k0 = grid().kappa0();
        prop_assert!(k0 * n.l2 <= n.h1 * (1.0 + 1e-12));
        prop_assert!(k0 * n.h1 <= n.h2 * (1.0 + 1e-12));
        // Parseval: the physical mean square matches the spectral norm.
        let p = u.to_physical();
        let ms: f64 = (0..2).map(|i| p.component(i).iter().map(|x| x * x).sum::<f64>()).sum::<f64>()
            / (32.0 * 32.0);
        prop_assert!((ms * grid().area() - n.l2 * n.l2).abs() <= 1e-12 * n.l2 * n.l2);
    }

    #[test]
    fn rescale_hits_the_target(seed in any::<u64>(), r in 0.1f64..50.0) {
        let u = random_divfree_field(&grid(), &spectrum(1.0, 5), seed).unwrap();
        prop_assert!((rescale_h1(&u, r).h1_norm() - r).abs() <= 1e-12 * r);
    }
}

#[test]
fn dealias_cutoffs_follow_the_two_thirds_rule() {
    for (n, k) in [(64, 21), (48, 15), (32, 10), (16, 5)] {
        assert_eq!(make_grid(n, 2.0 * PI).unwrap().dealias_cutoff(), k, "N = {n}");
    }
    let g = grid();
    let u = random_vector_field(&g, &spectrum(0.0, 7), 3).unwrap();
    let d = dealias(&u);
    assert!(is_band_limited(&d));
    assert_eq!(dealias(&d), d);
}

#[test]
fn single_mode_has_analytic_norms() {
    let l = 4.0;
    let g = make_grid(16, l).unwrap();
    let k0 = 2.0 * PI / l;
    // u = (0, 2 cos(k0·3x)) from û(±3,0) = (0, 1).
    let u = SpectralVectorField::single_mode(&g, 3, 0, [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap();
    let n = u.norms();
    let l2 = (2.0 * l * l).sqrt();
    assert!((n.l2 - l2).abs() < 1e-12 * l2);
    assert!((n.h1 - 3.0 * k0 * l2).abs() < 1e-12 * n.h1);
    assert!((n.h2 - 9.0 * k0 * k0 * l2).abs() < 1e-12 * n.h2);
    assert!(u.check_div_free(1e-14));
}

#[test]
fn taylor_green_is_a_steady_stokes_eigenfield_with_zero_nonlinearity() {
    let g = make_grid(32, 2.0 * PI).unwrap();
    let u = SpectralVectorField::taylor_green(&g, 1.5);
    assert!(bilinear_b(&u, &u).unwrap().l2_norm() < 1e-12);
    let au = stokes_apply(&u);
    assert!(au.sub(&u.scale(2.0)).unwrap().l2_norm() < 1e-12);
    let p = PhysicalVectorField::from_fn(&g, |x, y| (1.5 * x.sin() * y.cos(), -1.5 * x.cos() * y.sin()));
    assert!(p.to_spectral().sub(&u).unwrap().l2_norm() < 1e-13);
}

#[test]
fn mismatched_grids_are_rejected() {
    let a = SpectralVectorField::zeros(&make_grid(16, 2.0 * PI).unwrap());
    let b = SpectralVectorField::zeros(&make_grid(16, 3.0).unwrap());
    assert!(a.add(&b).is_err());
    assert!(make_grid(15, 1.0).is_err());
    assert!(make_grid(16, -1.0).is_err());
}
