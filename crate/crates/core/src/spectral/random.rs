use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::field::{FieldFlags, SpectralVectorField};
use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// Shell energy law E(s) = amplitude · s^(−exponent) on integer shells
/// `shell_min..=shell_max`, where shell s collects lattice modes with
/// round(|m|) = s and E(s) = ½‖P_s u‖².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergySpectrum {
    pub amplitude: f64,
    pub exponent: f64,
    pub shell_min: u32,
    pub shell_max: u32,
}

impl EnergySpectrum {
    pub fn power_law(amplitude: f64, exponent: f64, shell_min: u32, shell_max: u32) -> Self {
        Self {
            amplitude,
            exponent,
            shell_min,
            shell_max,
        }
    }

    pub fn shell_energy(&self, s: u32) -> f64 {
        if s < self.shell_min.max(1) || s > self.shell_max {
            0.0
        } else {
            self.amplitude * (s as f64).powf(-self.exponent)
        }
    }

    fn validate(&self, grid: &TorusGrid) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite() && self.exponent.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "spectrum amplitude/exponent must be finite and non-negative amplitude: {self:?}"
            )));
        }
        if self.amplitude > 0.0 && self.shell_max >= self.shell_min.max(1) {
            let top = self.shell_max as f64;
            let cut = grid.dealias_cutoff() as f64;
            if top > cut + 0.5 {
                return Err(Error::InvalidArgument(format!(
                    "spectrum shell {} exceeds the dealiased band (|m| <= {})",
                    self.shell_max,
                    grid.dealias_cutoff()
                )));
            }
        }
        Ok(())
    }
}

/// Integer shell index round(|m|) of flat index `p`.
pub fn shell_of(grid: &TorusGrid, p: usize) -> u32 {
    let (m1, m2) = grid.lattice_pair(p);
    ((m1 * m1 + m2 * m2) as f64).sqrt().round() as u32
}

/// Shell energies ½‖P_s u‖² indexed by shell s = 0, 1, ….
pub fn shell_energies(u: &SpectralVectorField) -> Vec<f64> {
    let g = u.grid();
    let mut out: Vec<f64> = Vec::new();
    for p in 0..g.len() {
        let m = u.coeffs(0)[p].norm_sqr() + u.coeffs(1)[p].norm_sqr();
        let s = shell_of(g, p) as usize;
        if out.len() <= s {
            out.resize(s + 1, 0.0);
        }
        out[s] += 0.5 * g.area() * m;
    }
    out
}

/// Seeded random divergence-free field with the prescribed shell energies.
pub fn random_divfree_field(grid: &TorusGrid, spectrum: &EnergySpectrum, seed: u64) -> Result<SpectralVectorField> {
    random_field(grid, spectrum, seed, true)
}

/// Seeded random mean-zero vector field (both polarizations populated).
pub fn random_vector_field(grid: &TorusGrid, spectrum: &EnergySpectrum, seed: u64) -> Result<SpectralVectorField> {
    random_field(grid, spectrum, seed, false)
}

fn random_field(grid: &TorusGrid, spectrum: &EnergySpectrum, seed: u64, div_free: bool) -> Result<SpectralVectorField> {
    spectrum.validate(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = grid.len();
    let mut c1 = vec![Complex64::default(); len];
    let mut c2 = vec![Complex64::default(); len];
    let mut gauss = || -> f64 { StandardNormal.sample(&mut rng) };
    for p in 1..len {
        let q = grid.mirror(p);
        if q <= p || grid.is_nyquist(p) || !grid.in_band(p) {
            continue;
        }
        if spectrum.shell_energy(shell_of(grid, p)) == 0.0 {
            continue;
        }
        let (k1, k2) = grid.wavevector(p);
        let kn = (k1 * k1 + k2 * k2).sqrt();
        let (a, b) = if div_free {
            let z = Complex64::new(gauss(), gauss());
            (z * (-k2 / kn), z * (k1 / kn))
        } else {
            (Complex64::new(gauss(), gauss()), Complex64::new(gauss(), gauss()))
        };
        c1[p] = a;
        c2[p] = b;
        c1[q] = a.conj();
        c2[q] = b.conj();
    }
    let mut u = SpectralVectorField::from_raw(
        grid,
        [c1, c2],
        FieldFlags {
            mean_zero: true,
            div_free,
        },
    );
    // Rescale shell by shell to hit the target energies exactly.
    let have = shell_energies(&u);
    let factors: Vec<f64> = (0..len)
        .map(|p| {
            let s = shell_of(grid, p);
            let target = spectrum.shell_energy(s);
            let e = have.get(s as usize).copied().unwrap_or(0.0);
            if e > 0.0 {
                (target / e).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    u.mul_diag_in_place(&factors);
    Ok(u)
}

/// Scales a nonzero field so that ‖∇u‖ equals `target`.
pub fn rescale_h1(u: &SpectralVectorField, target: f64) -> SpectralVectorField {
    let h1 = u.h1_norm();
    if h1 == 0.0 {
        u.clone()
    } else {
        u.scale(target / h1)
    }
}
