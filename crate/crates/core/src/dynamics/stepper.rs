//! Generic integrating-factor / IMEX stepping for systems of the form
//! du_i/dt = −λ_i(k) u_i + N_i(t, u), with a diagonal non-negative rate λ_i.

use crate::dynamics::Integrator;
use crate::error::{Error, Result};
use crate::spectral::SpectralVectorField;

/// Energy growth over a single step beyond this factor is treated as blow-up.
pub const BLOWUP_GROWTH: f64 = 1e6;

pub(crate) trait SplitSystem: Sync {
    /// Per-field linear decay rates λ_i(k), one table per coupled field.
    fn rates(&self) -> Vec<Vec<f64>>;

    /// Explicit part N(t, u) for every coupled field.
    fn explicit(&self, t: f64, state: &[SpectralVectorField]) -> Result<Vec<SpectralVectorField>>;
}

pub(crate) struct Stepper {
    dt: f64,
    integrator: Integrator,
    full: Vec<Vec<f64>>,
    half: Vec<Vec<f64>>,
}

impl Stepper {
    pub fn new(dt: f64, integrator: Integrator, rates: &[Vec<f64>]) -> Self {
        let (full, half) = match integrator {
            Integrator::IfRk2 => (
                rates
                    .iter()
                    .map(|r| r.iter().map(|&l| (-l * dt).exp()).collect())
                    .collect(),
                rates
                    .iter()
                    .map(|r| r.iter().map(|&l| (-0.5 * l * dt).exp()).collect())
                    .collect(),
            ),
            Integrator::ImexEuler => (
                rates
                    .iter()
                    .map(|r| r.iter().map(|&l| 1.0 / (1.0 + l * dt)).collect())
                    .collect(),
                Vec::new(),
            ),
        };
        Self {
            dt,
            integrator,
            full,
            half,
        }
    }

    /// Advances `state` from `t` to `t + dt`.
    pub fn step(&self, sys: &impl SplitSystem, t: f64, state: &mut [SpectralVectorField]) -> Result<()> {
        let before: f64 = state.iter().map(|u| u.coeff_l2().powi(2)).sum();
        let dt = self.dt;
        match self.integrator {
            Integrator::ImexEuler => {
                let n = sys.explicit(t, state)?;
                for ((u, k), fac) in state.iter_mut().zip(&n).zip(&self.full) {
                    u.axpy_in_place(dt, k);
                    u.mul_diag_in_place(fac);
                }
            }
            Integrator::IfRk2 => {
                let k1 = sys.explicit(t, state)?;
                let mid: Vec<SpectralVectorField> = state
                    .iter()
                    .zip(&k1)
                    .zip(&self.half)
                    .map(|((u, k), eh)| {
                        let mut m = u.clone();
                        m.axpy_in_place(0.5 * dt, k);
                        m.mul_diag_in_place(eh);
                        m
                    })
                    .collect();
                let mut k2 = sys.explicit(t + 0.5 * dt, &mid)?;
                for (((u, k), e), eh) in state.iter_mut().zip(k2.iter_mut()).zip(&self.full).zip(&self.half) {
                    u.mul_diag_in_place(e);
                    k.mul_diag_in_place(eh);
                    u.axpy_in_place(dt, k);
                }
            }
        }
        let after: f64 = state.iter().map(|u| u.coeff_l2().powi(2)).sum();
        if !after.is_finite() || !state.iter().all(|u| u.is_finite()) {
            return Err(Error::BlowUp {
                time: t + dt,
                detail: "non-finite coefficients".into(),
            });
        }
        if before > 0.0 && after > BLOWUP_GROWTH * before {
            return Err(Error::BlowUp {
                time: t + dt,
                detail: format!("energy grew by a factor {:.3e} in one step", after / before),
            });
        }
        Ok(())
    }
}
