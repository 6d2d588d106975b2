//! Pseudo-spectral 2D Navier–Stokes on the periodic square, nudging data
//! assimilation and the determining maps it induces, finite-rank
//! observation operators, and ensemble (empirical statistical solution)
//! diagnostics measured in truncated trajectory metrics.
//!
//! Norm convention used everywhere: with Fourier coefficients
//! û(k) = N⁻² Σ_x u(x) e^{−ik·x},
//! ‖u‖² = |Ω| Σ|û|², ‖∇u‖² = |Ω| Σ|k|²|û|², ‖Au‖² = |Ω| Σ|k|⁴|û|².

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod interpolants;
pub mod io;
pub mod nudging;
pub mod spectral;

pub use error::{Error, Result};
