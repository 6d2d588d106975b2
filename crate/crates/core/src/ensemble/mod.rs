//! Empirical trajectory statistical solutions: sampling, push-forwards,
//! truncated trajectory metrics, Kantorovich distances and decay tables.

mod measure;
mod metrics;
mod report;
mod transport;

pub use measure::{
    cost_matrix, eval_measure, kantorovich, member_seeds, observe_measure, paired_distance, push_forward_s,
    push_forward_wj, push_forward_wj_lockstep, sample_initial_measure, shift_measure, EmpiricalMeasure, Ground,
    InitialKind, LockstepPushForward, Provenance, LOCKSTEP_TOLERANCE,
};
pub use metrics::{d0_plus, d1_plus, d_plus_from_series, MetricConfig};
pub use report::{decay_report, decay_table, transfer_check, DecayReport, DecayRow, TransferCheck};
pub use transport::{
    optimal_assignment, sinkhorn, transport, SinkhornResult, TransportMode, TransportResult, EXACT_ASSIGNMENT_LIMIT,
};
