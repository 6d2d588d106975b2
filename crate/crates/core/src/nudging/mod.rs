//! Nudged solves W₊, burn-in W, linearization and synchronization diagnostics.

mod config;
mod observe;
mod report;
mod solve;

pub use config::{
    advise_parameters, condbeta_rhs, rho_floors, Admissibility, NudgingConfig, NudgingConstants, ParamAdvice,
    RhoFloors, BETA_RANGE,
};
pub use observe::{observe, NoiseSpec, ObservationStream};
pub use report::{sync_report, y_norm, SyncOptions, SyncReport};
pub use solve::{
    default_burn_in, solve_linearized, solve_linearized_pair, solve_nudged_from, solve_w_burnin, solve_wplus,
    twin_burnin, twin_run, TwinRun, EXPLICIT_NUDGING_LIMIT,
};
