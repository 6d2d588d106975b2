//! Finite-rank observation operators J and empirical certification of
//! their approximation bounds.

mod appendix;
mod bounds;
mod op;
pub mod quadrature;

pub use appendix::{appendix_oscillation_check, OscillationCheck, Square};
pub use bounds::{appendix_draws, bound_samples, measure_across_h, measure_bound, BoundId, BoundReport, BoundSample};
pub use op::{
    apply_j, build_interpolant, cell_values, InterpolantKind, InterpolantOp, InterpolantSpec, MollifierSymbol,
};
