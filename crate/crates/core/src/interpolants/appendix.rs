use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quadrature::gauss_legendre_on;
use crate::error::{Error, Result};
use crate::spectral::SpectralScalarField;

/// Closed square [x0, x0 + l] × [y0, y0 + l].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub origin: [f64; 2],
    pub side: f64,
}

impl Square {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let tol = 1e-12 * self.side.max(1.0);
        (0..2).all(|i| p[i] >= self.origin[i] - tol && p[i] <= self.origin[i] + self.side + tol)
    }
}

/// Both sides of |φ(x) − φ(y)| ≤ 2(‖∇φ‖² + √2 l ‖∇φ‖ ‖∂²φ/∂x∂y‖)^{1/2},
/// norms taken in L²(Q).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub grad_norm: f64,
    pub mixed_norm: f64,
}

impl OscillationCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

pub fn appendix_oscillation_check(
    phi: &SpectralScalarField,
    square: &Square,
    x: [f64; 2],
    y: [f64; 2],
) -> Result<OscillationCheck> {
    if !(square.side > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "square side must be positive (got {})",
            square.side
        )));
    }
    for p in [x, y] {
        if !square.contains(p) {
            return Err(Error::InvalidArgument(format!(
                "point {p:?} lies outside the square {square:?}"
            )));
        }
    }
    let modes: Vec<(f64, f64, Complex64)> = phi
        .active_modes()
        .into_iter()
        .filter(|m| m.0 != 0.0 || m.1 != 0.0)
        .collect();
    let lhs = (phi.eval(x[0], x[1]) - phi.eval(y[0], y[1])).abs();
    if modes.is_empty() {
        return Ok(OscillationCheck {
            lhs,
            rhs: 0.0,
            grad_norm: 0.0,
            mixed_norm: 0.0,
        });
    }
    let l = square.side;
    let kmax = modes.iter().map(|m| m.0.abs().max(m.1.abs())).fold(0.0, f64::max);
    let nq = (kmax * l).ceil() as usize + 24;
    let (xs, wx) = gauss_legendre_on(nq, square.origin[0], square.origin[0] + l);
    let (ys, wy) = gauss_legendre_on(nq, square.origin[1], square.origin[1] + l);
    let i = Complex64::i();
    let mut grad2 = 0.0;
    let mut mixed2 = 0.0;
    // Separable sum: for each x-node fold the x-phase into the coefficients.
    let ey: Vec<Vec<Complex64>> = modes
        .iter()
        .map(|m| ys.iter().map(|&y| Complex64::from_polar(1.0, m.1 * y)).collect())
        .collect();
    for (ix, &xv) in xs.iter().enumerate() {
        let cx: Vec<Complex64> = modes
            .iter()
            .map(|m| m.2 * Complex64::from_polar(1.0, m.0 * xv))
            .collect();
        for (iy, &wyv) in wy.iter().enumerate() {
            let (mut dx, mut dy, mut dxy) = (0.0, 0.0, 0.0);
            for (k, m) in modes.iter().enumerate() {
                let z = cx[k] * ey[k][iy];
                dx += (i * m.0 * z).re;
                dy += (i * m.1 * z).re;
                dxy -= m.0 * m.1 * z.re;
            }
            let w = wx[ix] * wyv;
            grad2 += w * (dx * dx + dy * dy);
            mixed2 += w * dxy * dxy;
        }
    }
    let g = grad2.sqrt();
    let m = mixed2.sqrt();
    let rhs = 2.0 * (g * g + std::f64::consts::SQRT_2 * l * g * m).sqrt();
    Ok(OscillationCheck {
        lhs,
        rhs,
        grad_norm: g,
        mixed_norm: m,
    })
}
