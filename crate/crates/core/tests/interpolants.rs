use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use nudge_nse::interpolants::quadrature::gauss_legendre_on;
use nudge_nse::interpolants::{
    appendix_draws, appendix_oscillation_check, apply_j, build_interpolant, cell_values, InterpolantKind,
    InterpolantSpec, MollifierSymbol, Square,
};
use nudge_nse::spectral::{
    make_grid, random_divfree_field, random_vector_field, EnergySpectrum, SpectralScalarField, TorusGrid,
};
use nudge_nse::Error;

fn grid() -> TorusGrid {
    make_grid(32, 2.0 * PI).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn modal_operator_is_an_orthogonal_projection(seed in any::<u64>(), cutoff in 1u32..8) {
        let g = grid();
        let op = build_interpolant(&InterpolantSpec::modal(&g, cutoff)).unwrap();
        let u = random_divfree_field(&g, &EnergySpectrum::power_law(1.0, 1.0, 1, 9), seed).unwrap();
        let ju = apply_j(&op, &u).unwrap();
        prop_assert_eq!(&apply_j(&op, &ju).unwrap(), &ju);
        let r = u.sub(&ju).unwrap();
        prop_assert!(r.inner(&ju).unwrap().abs() <= 1e-12 * u.l2_norm().powi(2));
        prop_assert!(ju.check_div_free(1e-12));
        for p in 0..g.len() {
            let (m1, m2) = g.lattice_pair(p);
            if m1 * m1 + m2 * m2 > (cutoff * cutoff) as i64 {
                prop_assert_eq!(ju.coeffs(0)[p], Complex64::default());
            }
        }
    }

    #[test]
    fn cell_operators_are_linear(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0) {
        let g = grid();
        let sp = EnergySpectrum::power_law(1.0, 1.0, 1, 8);
        let (u, v) = (random_vector_field(&g, &sp, s1).unwrap(), random_vector_field(&g, &sp, s2).unwrap());
        for spec in [InterpolantSpec::volume_avg(&g, PI / 4.0), InterpolantSpec::nodal(&g, PI / 4.0)] {
            let op = build_interpolant(&spec).unwrap();
            let lhs = apply_j(&op, &u.lincomb(a, &v, 1.0).unwrap()).unwrap();
            let rhs = apply_j(&op, &u).unwrap().lincomb(a, &apply_j(&op, &v).unwrap(), 1.0).unwrap();
            prop_assert!(lhs.sub(&rhs).unwrap().l2_norm() <= 1e-12 * (1.0 + rhs.l2_norm()));
            prop_assert!(lhs.satisfies_invariants());
        }
    }
}

#[test]
fn cell_averages_match_quadrature() {
    let g = grid();
    let h = PI / 4.0;
    let op = build_interpolant(&InterpolantSpec::volume_avg(&g, h)).unwrap();
    assert_eq!(op.cells_per_side(), Some(8));
    assert_eq!(op.declared_rank(), 128);
    let u = random_vector_field(&g, &EnergySpectrum::power_law(1.0, 1.0, 1, 6), 3).unwrap();
    let phi = SpectralScalarField::from_coeffs(&g, u.coeffs(1).to_vec()).unwrap();
    let c = cell_values(&op, &u, 1).unwrap();
    for j in [0usize, 9, 27, 63] {
        let (j1, j2) = (j / 8, j % 8);
        let (xs, wx) = gauss_legendre_on(24, j1 as f64 * h, (j1 + 1) as f64 * h);
        let (ys, wy) = gauss_legendre_on(24, j2 as f64 * h, (j2 + 1) as f64 * h);
        let mut avg = 0.0;
        for (x, a) in xs.iter().zip(&wx) {
            for (y, b) in ys.iter().zip(&wy) {
                avg += a * b * phi.eval(*x, *y);
            }
        }
        avg /= h * h;
        assert!((c[j] - avg).abs() < 1e-12, "cell {j}: {} vs {avg}", c[j]);
    }
}

#[test]
fn nodal_values_match_grid_samples() {
    let g = grid();
    let h = PI / 4.0;
    let op = build_interpolant(&InterpolantSpec::nodal(&g, h)).unwrap();
    let u = random_vector_field(&g, &EnergySpectrum::power_law(1.0, 1.0, 1, 9), 8).unwrap();
    let phys = u.to_physical();
    let c = cell_values(&op, &u, 0).unwrap();
    // Cell centres fall on grid points: node (j + ½)h is grid index 4j + 2.
    for j1 in 0..8 {
        for j2 in 0..8 {
            let p = (4 * j1 + 2) * 32 + 4 * j2 + 2;
            let (x, y) = g.point(p);
            assert!((x - (j1 as f64 + 0.5) * h).abs() < 1e-12 && (y - (j2 as f64 + 0.5) * h).abs() < 1e-12);
            assert!((c[j1 * 8 + j2] - phys.component(0)[p]).abs() < 1e-12);
        }
    }
}

#[test]
fn mollifier_has_unit_mass() {
    let m = MollifierSymbol::new(0.3);
    assert!((m.eval(0.0) - 1.0).abs() < 1e-14);
    let (r, w) = gauss_legendre_on(400, 0.0, 0.3);
    let mass: f64 = r
        .iter()
        .zip(&w)
        .map(|(r, w)| w * 2.0 * PI * r * m.profile(*r))
        .sum::<f64>()
        * m.normalization();
    assert!((mass - 1.0).abs() < 1e-10, "{mass}");
    assert!(m.eval(40.0).abs() < 0.1);
}

#[test]
fn appendix_inequality_on_a_single_mode() {
    let g = grid();
    // φ = cos x: ∇φ = (−sin x, 0), no mixed derivative.
    let mut c = vec![Complex64::default(); g.len()];
    c[32] = Complex64::new(0.5, 0.0);
    c[31 * 32] = Complex64::new(0.5, 0.0);
    let phi = SpectralScalarField::from_coeffs(&g, c).unwrap();
    let l = 1.3;
    let sq = Square {
        origin: [0.2, 0.4],
        side: l,
    };
    let (x, y) = ([0.2, 0.5], [1.5, 1.0]);
    let chk = appendix_oscillation_check(&phi, &sq, x, y).unwrap();
    let (a, b) = (0.2, 0.2 + l);
    let grad2 = l * (0.5 * (b - a) - 0.25 * ((2.0 * b).sin() - (2.0 * a).sin()));
    assert!((chk.grad_norm - grad2.sqrt()).abs() < 1e-12);
    assert!(chk.mixed_norm.abs() < 1e-12);
    assert!((chk.lhs - (0.2f64.cos() - 1.5f64.cos()).abs()).abs() < 1e-14);
    assert!((chk.rhs - 2.0 * grad2.sqrt()).abs() < 1e-12);
    assert!(chk.holds());
    assert!(appendix_oscillation_check(&phi, &sq, [5.0, 0.5], y).is_err());

    let draws = appendix_draws(100, 4).unwrap();
    assert!(draws.iter().all(|(lhs, rhs)| lhs <= rhs));
}

#[test]
fn invalid_operators_are_rejected() {
    let g = grid();
    let bad = |kind: InterpolantKind| {
        matches!(
            build_interpolant(&InterpolantSpec { kind, grid: g.clone() }),
            Err(Error::InvalidInterpolant(_))
        )
    };
    assert!(bad(InterpolantKind::Modal { cutoff: 0, h: None }));
    assert!(bad(InterpolantKind::VolumeAvg { h: 1.0, eps: None }));
    assert!(bad(InterpolantKind::VolumeAvg {
        h: PI / 4.0,
        eps: Some(PI / 8.0)
    }));
    assert!(bad(InterpolantKind::Nodal {
        h: PI / 4.0,
        eps: None,
        node_offset: [1.5, 0.0]
    }));
    let modal = build_interpolant(&InterpolantSpec::modal(&g, 3)).unwrap();
    assert!((modal.h() - 2.0 * PI / 7.0).abs() < 1e-15);
    let u = random_vector_field(&g, &EnergySpectrum::power_law(1.0, 1.0, 1, 3), 1).unwrap();
    assert!(cell_values(&modal, &u, 0).is_err());
}
