use num_complex::Complex64;

use super::field::{split_pair, FieldFlags, SpectralVectorField};
use super::grid::TorusGrid;
use crate::error::Result;

/// Helmholtz–Leray projection û ↦ û − k(k·û)/|k|².
pub fn leray_project(u: &SpectralVectorField) -> SpectralVectorField {
    let mut out = u.clone();
    leray_in_place(&mut out);
    out
}

pub(crate) fn leray_in_place(u: &mut SpectralVectorField) {
    let g = u.grid().clone();
    let c = u.coeffs_mut();
    for p in 1..g.len() {
        let (k1, k2) = g.wavevector(p);
        let k2sum = k1 * k1 + k2 * k2;
        let dot = c[0][p] * k1 + c[1][p] * k2;
        if dot == Complex64::default() {
            continue;
        }
        let s = dot / k2sum;
        c[0][p] -= s * k1;
        c[1][p] -= s * k2;
    }
    u.set_flags(FieldFlags {
        mean_zero: true,
        div_free: true,
    });
}

/// Stokes operator A = −Δ: multiplication by |k|².
pub fn stokes_apply(u: &SpectralVectorField) -> SpectralVectorField {
    let g = u.grid();
    let k2: Vec<f64> = (0..g.len()).map(|p| g.k_squared(p)).collect();
    let mut out = u.clone();
    out.mul_diag_in_place(&k2);
    out
}

/// Zeroes every mode outside the 2/3-rule band.
pub fn dealias(u: &SpectralVectorField) -> SpectralVectorField {
    let mut out = u.clone();
    dealias_in_place(&mut out);
    out
}

pub(crate) fn dealias_in_place(u: &mut SpectralVectorField) {
    let g = u.grid().clone();
    let c = u.coeffs_mut();
    for p in 0..g.len() {
        if !g.in_band(p) {
            c[0][p] = Complex64::default();
            c[1][p] = Complex64::default();
        }
    }
}

/// True when no mode outside the dealiasing band is populated.
pub fn is_band_limited(u: &SpectralVectorField) -> bool {
    let g = u.grid();
    (0..g.len())
        .all(|p| g.in_band(p) || (u.coeffs(0)[p] == Complex64::default() && u.coeffs(1)[p] == Complex64::default()))
}

/// B(u, v) = P_σ[(u·∇)v], evaluated pseudo-spectrally with 2/3-rule
/// dealiasing of the inputs and the product.
pub fn bilinear_b(u: &SpectralVectorField, v: &SpectralVectorField) -> Result<SpectralVectorField> {
    u.grid().check_same(v.grid())?;
    Ok(bilinear_impl(u, v, true))
}

/// Same product without any truncation (aliased); for comparison runs.
pub fn bilinear_b_aliased(u: &SpectralVectorField, v: &SpectralVectorField) -> Result<SpectralVectorField> {
    u.grid().check_same(v.grid())?;
    Ok(bilinear_impl(u, v, false))
}

pub(crate) fn bilinear_impl(u: &SpectralVectorField, v: &SpectralVectorField, truncate: bool) -> SpectralVectorField {
    let g = u.grid();
    let len = g.len();
    let keep = |p: usize| !truncate || g.in_band(p);
    let i = Complex64::i();

    // Physical u via one complex inverse transform of û₁ + iû₂.
    let mut zu = vec![Complex64::default(); len];
    // ∂ₓv_c + i∂ᵧv_c for c = 1, 2.
    let mut zg1 = vec![Complex64::default(); len];
    let mut zg2 = vec![Complex64::default(); len];
    for p in 0..len {
        if !keep(p) {
            continue;
        }
        let (k1, k2) = g.wavevector(p);
        zu[p] = u.coeffs(0)[p] + i * u.coeffs(1)[p];
        let a = v.coeffs(0)[p];
        let b = v.coeffs(1)[p];
        zg1[p] = i * k1 * a - k2 * a;
        zg2[p] = i * k1 * b - k2 * b;
    }
    g.fft_inverse(&mut zu);
    g.fft_inverse(&mut zg1);
    g.fft_inverse(&mut zg2);

    let mut prod = vec![Complex64::default(); len];
    for p in 0..len {
        let (u1, u2) = (zu[p].re, zu[p].im);
        let w1 = u1 * zg1[p].re + u2 * zg1[p].im;
        let w2 = u1 * zg2[p].re + u2 * zg2[p].im;
        prod[p] = Complex64::new(w1, w2);
    }
    g.fft_forward(&mut prod);
    let c = split_pair(g, &prod, 1.0 / len as f64);
    let mut out = SpectralVectorField::from_raw(g, c, FieldFlags::default());
    if truncate {
        dealias_in_place(&mut out);
    }
    leray_in_place(&mut out);
    out
}

/// Spectral gradient ∇φ of a scalar given by Hermitian coefficients.
pub fn gradient_field(grid: &TorusGrid, phi: &[Complex64]) -> SpectralVectorField {
    let i = Complex64::i();
    let mut c1 = vec![Complex64::default(); grid.len()];
    let mut c2 = c1.clone();
    for p in 1..grid.len() {
        if grid.is_nyquist(p) {
            continue;
        }
        let (k1, k2) = grid.wavevector(p);
        c1[p] = i * k1 * phi[p];
        c2[p] = i * k2 * phi[p];
    }
    SpectralVectorField::from_raw(
        grid,
        [c1, c2],
        FieldFlags {
            mean_zero: true,
            div_free: false,
        },
    )
}
