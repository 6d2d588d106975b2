use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::appendix::{appendix_oscillation_check, Square};
use super::op::{apply_j, InterpolantKind, InterpolantOp};
use crate::error::Result;
use crate::spectral::{make_grid, random_vector_field, EnergySpectrum, SpectralScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    /// ‖φ − Jφ‖ ≤ c₁ h ‖∇φ‖
    Type1,
    /// ‖φ − Jφ‖ ≤ c₂₁ h ‖∇φ‖ + c₂₂ h² ‖Δφ‖
    Type2,
    /// ‖φ − Jφ‖ ≤ c′₂₁ h ‖∇φ‖ + c′₂₂ h^{3/2} ‖∇φ‖^{1/2} ‖Δφ‖^{1/2}
    Type2b,
    /// ‖∇(φ − Jφ)‖ ≤ c̃₁ ‖∇φ‖
    H1Type1,
    /// ‖∇(φ − Jφ)‖ ≤ c̃₂₁ ‖∇φ‖ + c̃₂₂ h ‖Δφ‖
    H1Type2,
    /// Oscillation inequality on a square; constant = max lhs/rhs.
    Appendix,
}

impl BoundId {
    pub fn applies_to(&self, kind: &InterpolantKind) -> bool {
        match self {
            BoundId::Type1 | BoundId::H1Type1 => {
                matches!(kind, InterpolantKind::Modal { .. } | InterpolantKind::VolumeAvg { .. })
            }
            BoundId::Type2 | BoundId::Type2b | BoundId::H1Type2 => {
                matches!(kind, InterpolantKind::Nodal { .. })
            }
            BoundId::Appendix => true,
        }
    }
}

/// Empirical constants of one bound.
///
/// Single-constant bounds report the maximum ratio. Two-constant bounds
/// y ≤ c_a·x_a + c_b·x_b report the axis constants
/// `[max y/x_a, max y/x_b]` (each term alone bounding every sample) in
/// `measured_constants`, the non-negative least-squares pair in
/// `least_squares`, and that pair rescaled to an envelope of every sample
/// in `envelope_fit`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_id: BoundId,
    pub measured_constants: Vec<f64>,
    pub least_squares: Option<Vec<f64>>,
    pub envelope_fit: Option<Vec<f64>>,
    pub n_samples: usize,
    pub h_values: Vec<f64>,
}

/// Per-field quantities entering the interpolant bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSample {
    /// ‖φ − Jφ‖
    pub err_l2: f64,
    /// ‖∇(φ − Jφ)‖
    pub err_h1: f64,
    /// ‖∇φ‖
    pub grad: f64,
    /// ‖Δφ‖
    pub lap: f64,
}

/// Spectrum law of measurement sample `i`: decay exponents 2, 3, 4 and a
/// shell range scaled to the cell count n = L/h (from n/8 up to 0.5, 1 or
/// 2 times n), so the family is the same at every h up to resolution.
fn sample_spectrum(op: &InterpolantOp, i: usize) -> EnergySpectrum {
    let g = op.grid();
    let cells = g.period() / op.h();
    let exps = [2.0, 3.0, 4.0];
    let spans = [0.5, 1.0, 2.0];
    let cut = g.dealias_cutoff().max(1);
    let top = ((spans[(i / 3) % 3] * cells).round() as i64).clamp(1, cut) as u32;
    let bottom = ((cells / 8.0).round() as u32).clamp(1, top);
    EnergySpectrum::power_law(1.0, exps[i % 3], bottom, top)
}

/// Draws `n_samples` seeded random H² vector fields and records the
/// quantities entering every bound.
pub fn bound_samples(op: &InterpolantOp, n_samples: usize, seed: u64) -> Result<Vec<BoundSample>> {
    (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let spec = sample_spectrum(op, i);
            let phi = random_vector_field(op.grid(), &spec, seed.wrapping_add(i as u64))?;
            let e = phi.sub(&apply_j(op, &phi)?)?;
            let ne = e.norms();
            let np = phi.norms();
            Ok(BoundSample {
                err_l2: ne.l2,
                err_h1: ne.h1,
                grad: np.h1,
                lap: np.h2,
            })
        })
        .collect()
}

pub fn measure_bound(op: &InterpolantOp, bound_id: BoundId, n_samples: usize, seed: u64) -> Result<BoundReport> {
    if !bound_id.applies_to(op.kind()) {
        log::warn!("bound {bound_id:?} is not the one stated for {:?}", op.kind());
    }
    let h = op.h();
    let (measured, ls, env) = if bound_id == BoundId::Appendix {
        let checks = appendix_draws(n_samples, seed)?;
        let worst = checks
            .iter()
            .filter(|c| c.1 > 0.0)
            .map(|c| c.0 / c.1)
            .fold(0.0, f64::max);
        (vec![worst], None, None)
    } else {
        let s = bound_samples(op, n_samples, seed)?;
        match bound_id {
            BoundId::Type1 => (vec![max_ratio(s.iter().map(|x| (x.err_l2, h * x.grad)))], None, None),
            BoundId::H1Type1 => (vec![max_ratio(s.iter().map(|x| (x.err_h1, x.grad)))], None, None),
            BoundId::Type2 => two_constant(s.iter().map(|x| (x.err_l2, h * x.grad, h * h * x.lap))),
            BoundId::Type2b => two_constant(
                s.iter()
                    .map(|x| (x.err_l2, h * x.grad, h.powf(1.5) * (x.grad * x.lap).sqrt())),
            ),
            BoundId::H1Type2 => two_constant(s.iter().map(|x| (x.err_h1, x.grad, h * x.lap))),
            BoundId::Appendix => unreachable!(),
        }
    };
    Ok(BoundReport {
        bound_id,
        measured_constants: measured,
        least_squares: ls,
        envelope_fit: env,
        n_samples,
        h_values: vec![h],
    })
}

fn max_ratio(it: impl Iterator<Item = (f64, f64)>) -> f64 {
    it.filter(|p| p.1 > 0.0).map(|(y, x)| y / x).fold(0.0, f64::max)
}

type TwoConstant = (Vec<f64>, Option<Vec<f64>>, Option<Vec<f64>>);

/// Axis constants, least-squares y ≈ c₁a + c₂b with c ≥ 0, and its
/// envelope rescaling.
fn two_constant(it: impl Iterator<Item = (f64, f64, f64)>) -> TwoConstant {
    let pts: Vec<(f64, f64, f64)> = it.filter(|p| p.1 > 0.0 || p.2 > 0.0).collect();
    let axis = vec![
        max_ratio(pts.iter().map(|p| (p.0, p.1))),
        max_ratio(pts.iter().map(|p| (p.0, p.2))),
    ];
    let c = nnls2(&pts);
    let scale = pts
        .iter()
        .map(|&(y, a, b)| {
            let m = c[0] * a + c[1] * b;
            if m > 0.0 {
                y / m
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    (axis, Some(c.to_vec()), Some(vec![scale * c[0], scale * c[1]]))
}

/// Two-variable non-negative least squares by enumerating active sets.
pub(crate) fn nnls2(pts: &[(f64, f64, f64)]) -> [f64; 2] {
    let (mut saa, mut sab, mut sbb, mut sya, mut syb, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &(y, a, b) in pts {
        saa += a * a;
        sab += a * b;
        sbb += b * b;
        sya += y * a;
        syb += y * b;
        syy += y * y;
    }
    let resid = |c: [f64; 2]| {
        syy - 2.0 * (c[0] * sya + c[1] * syb) + c[0] * c[0] * saa + 2.0 * c[0] * c[1] * sab + c[1] * c[1] * sbb
    };
    let mut cands: Vec<[f64; 2]> = Vec::new();
    let det = saa * sbb - sab * sab;
    if det > 1e-14 * saa * sbb {
        let c0 = (sya * sbb - syb * sab) / det;
        let c1 = (syb * saa - sya * sab) / det;
        if c0 >= 0.0 && c1 >= 0.0 {
            cands.push([c0, c1]);
        }
    }
    if saa > 0.0 {
        cands.push([(sya / saa).max(0.0), 0.0]);
    }
    if sbb > 0.0 {
        cands.push([0.0, (syb / sbb).max(0.0)]);
    }
    cands
        .into_iter()
        .min_by(|x, y| resid(*x).total_cmp(&resid(*y)))
        .unwrap_or([0.0, 0.0])
}

/// Random (φ, square, point pair) draws; returns (lhs, rhs) per draw.
pub fn appendix_draws(n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    let grid = make_grid(32, 2.0 * std::f64::consts::PI)?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9).wrapping_add(i as u64));
            let top = rng.random_range(1..=8u32);
            let exp = [1.0, 2.0, 3.0, 4.0][i % 4];
            let spec = EnergySpectrum::power_law(1.0, exp, 1, top);
            let v = random_vector_field(&grid, &spec, rng.random())?;
            let mut c: Vec<Complex64> = v.coeffs(0).to_vec();
            c[0] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            let phi = SpectralScalarField::from_coeffs(&grid, c)?;
            let side = rng.random_range(0.05..grid.period());
            let origin = [
                rng.random_range(0.0..grid.period()),
                rng.random_range(0.0..grid.period()),
            ];
            let sq = Square { origin, side };
            let mut pt = || {
                [
                    origin[0] + side * rng.random::<f64>(),
                    origin[1] + side * rng.random::<f64>(),
                ]
            };
            let (x, y) = (pt(), pt());
            let chk = appendix_oscillation_check(&phi, &sq, x, y)?;
            Ok((chk.lhs, chk.rhs))
        })
        .collect()
}

/// Runs `measure_bound` once per cell count; `make(c)` builds the
/// operator (and its grid) for `c` cells per side.
pub fn measure_across_h(
    make: impl Fn(usize) -> Result<InterpolantOp> + Sync,
    cells: &[usize],
    bound_id: BoundId,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<BoundReport>> {
    cells
        .iter()
        .map(|&c| measure_bound(&make(c)?, bound_id, n_samples, seed))
        .collect()
}
