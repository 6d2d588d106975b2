use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interpolants::InterpolantOp;

/// The unquantified absolute constants of the theory, user-supplied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NudgingConstants {
    #[serde(default = "one")]
    pub c1_star: f64,
    #[serde(default = "one")]
    pub c2_star: f64,
    /// Used as c₃** in the Type II observation-radius floor.
    #[serde(default = "one")]
    pub c3_star: f64,
    #[serde(default = "one")]
    pub c_l: f64,
    #[serde(default = "one")]
    pub c_t: f64,
    #[serde(default = "one")]
    pub c_b: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for NudgingConstants {
    fn default() -> Self {
        Self {
            c1_star: 1.0,
            c2_star: 1.0,
            c3_star: 1.0,
            c_l: 1.0,
            c_t: 1.0,
            c_b: 1.0,
        }
    }
}

impl NudgingConstants {
    /// Effective c₁* = c1_star · max(c_T², c_B²).
    pub fn c1_effective(&self) -> f64 {
        self.c1_star * self.c_t.powi(2).max(self.c_b.powi(2))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub condbeta_ok: bool,
    pub condbetah_ok: bool,
    /// Right side c₁*(G²/β + ρ²)·log[c₁*(G²/β + ρ²)] at the configured β.
    pub condbeta_rhs: f64,
    /// βκ₀²h².
    pub condbetah_lhs: f64,
}

/// Relaxation parameter, observation operator and observation radius.
#[derive(Clone, Debug)]
pub struct NudgingConfig {
    pub beta: f64,
    pub h: f64,
    pub interpolant: Arc<InterpolantOp>,
    pub rho: f64,
    pub constants: NudgingConstants,
}

impl NudgingConfig {
    /// h defaults to the operator's own scale.
    pub fn new(beta: f64, interpolant: InterpolantOp, rho: f64, constants: NudgingConstants) -> Result<Self> {
        let h = interpolant.h();
        Self::with_h(beta, h, Arc::new(interpolant), rho, constants)
    }

    pub fn with_h(
        beta: f64,
        h: f64,
        interpolant: Arc<InterpolantOp>,
        rho: f64,
        constants: NudgingConstants,
    ) -> Result<Self> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Config {
                key: "nudging.beta".into(),
                message: format!("must be non-negative and finite (got {beta})"),
            });
        }
        if !(h > 0.0) {
            return Err(Error::Config {
                key: "nudging.h".into(),
                message: format!("must be positive (got {h})"),
            });
        }
        if !(rho > 0.0) {
            return Err(Error::Config {
                key: "nudging.rho".into(),
                message: format!("must be positive (got {rho})"),
            });
        }
        if beta == 0.0 {
            log::warn!("beta = 0: no nudging, the solve reduces to the plain NSE from zero");
        }
        Ok(Self {
            beta,
            h,
            interpolant,
            rho,
            constants,
        })
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::with_h(beta, self.h, self.interpolant.clone(), self.rho, self.constants)
    }

    pub fn no_nudging(&self) -> bool {
        self.beta == 0.0
    }

    pub fn admissibility(&self, grashof: f64, kappa0: f64) -> Admissibility {
        let rhs = condbeta_rhs(self.beta, grashof, self.rho, &self.constants);
        let lhs_h = self.beta * (kappa0 * self.h).powi(2);
        Admissibility {
            condbeta_ok: self.beta > 0.0 && self.beta >= rhs,
            condbetah_ok: lhs_h <= self.constants.c2_star,
            condbeta_rhs: rhs,
            condbetah_lhs: lhs_h,
        }
    }
}

/// c₁*(G²/β + ρ²)·log[c₁*(G²/β + ρ²)].
pub fn condbeta_rhs(beta: f64, grashof: f64, rho: f64, c: &NudgingConstants) -> f64 {
    let x = c.c1_effective() * (grashof * grashof / beta + rho * rho);
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Advisor output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamAdvice {
    pub beta_min: f64,
    pub h_max: f64,
    /// True when the condition already holds at the lower end of the range.
    pub vacuous: bool,
    pub grashof: f64,
    pub rho: f64,
    pub kappa0: f64,
    pub constants: NudgingConstants,
}

pub const BETA_RANGE: (f64, f64) = (1e-6, 1e12);

/// Smallest β in [10⁻⁶, 10¹²] with β ≥ c₁*(G²/β + ρ²) log[c₁*(G²/β + ρ²)],
/// to 10⁻⁶ relative (the returned value satisfies the condition), and
/// h_max = √(c₂*/β)/κ₀.
pub fn advise_parameters(grashof: f64, rho: f64, constants: &NudgingConstants, kappa0: f64) -> Result<ParamAdvice> {
    if !(grashof >= 0.0) || !(rho > 0.0) || !(kappa0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need G >= 0, rho > 0, kappa0 > 0 (got G = {grashof}, rho = {rho}, kappa0 = {kappa0})"
        )));
    }
    let gap = |b: f64| b - condbeta_rhs(b, grashof, rho, constants);
    let (mut lo, mut hi) = BETA_RANGE;
    let mut vacuous = false;
    let beta = if gap(lo) >= 0.0 {
        vacuous = true;
        lo
    } else if gap(hi) < 0.0 {
        return Err(Error::NoAdmissibleBeta(format!(
            "condition fails on the whole range [{lo:e}, {hi:e}] (G = {grashof}, rho = {rho}, c1* = {})",
            constants.c1_effective()
        )));
    } else {
        while hi / lo - 1.0 > 1e-7 {
            let mid = (lo * hi).sqrt();
            if gap(mid) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    Ok(ParamAdvice {
        beta_min: beta,
        h_max: (constants.c2_star / beta).sqrt() / kappa0,
        vacuous,
        grashof,
        rho,
        kappa0,
        constants: *constants,
    })
}

/// Observation-radius floors for the absorbing trajectory set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoFloors {
    /// (1 + c̃₁)G, enough for data from the attractor.
    pub attractor_type1: f64,
    /// √2(1 + c̃₁)G, Type I data from the absorbing set.
    pub absorbing_type1: f64,
    /// c₃**[G + (G + c_L⁻²)³/√β], Type II data from the absorbing set.
    pub absorbing_type2: Option<f64>,
}

pub fn rho_floors(grashof: f64, c_tilde1: f64, beta: Option<f64>, constants: &NudgingConstants) -> RhoFloors {
    let a = (1.0 + c_tilde1) * grashof;
    RhoFloors {
        attractor_type1: a,
        absorbing_type1: std::f64::consts::SQRT_2 * a,
        absorbing_type2: beta
            .filter(|b| *b > 0.0)
            .map(|b| constants.c3_star * (grashof + (grashof + constants.c_l.powi(-2)).powi(3) / b.sqrt())),
    }
}
