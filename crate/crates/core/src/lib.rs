//! Scheduling of local co-generation against grid and gas prices.
//!
//! The crate is organised bottom-up:
//! - [`model`]: domain types, the one-slot dispatch rule, cost accounting
//! - [`segments`]: the capped benefit process and the exact offline optimum
//! - [`online`]: causal policies, with and without a prediction window
//! - [`ratio`]: competitive-ratio bounds, threshold tuning, adversarial
//!   lower bounds
//! - [`multigen`]: layered scheduling of a fleet of generators

pub mod model;
pub mod multigen;
pub mod online;
pub mod ratio;
pub mod segments;

pub use model::{
    dispatch_given_status, slot_cost, total_cost, validate_params, DispatchSlot, InputSlot,
    ModelError, Schedule, SystemParams, Trace,
};
pub use multigen::{
    cr_fleet, layer_demand, schedule_fleet, FleetMode, FleetSchedule, GeneratorFleet,
    LayeredTrace, MultigenError,
};
pub use online::{
    chase_step, chaselk_step, chasepp_plus_step, chasepp_step, noisy_window, rhc_step, run_online,
    HyperbolicParams, NoiseKind, NoiseModel, Policy, PolicyKind, PolicyState, PredictionWindow,
};
pub use ratio::{
    adversary_chase, alpha, cr_chase, cr_chaselk, cr_chaselk_plus, cr_chasepp, cr_chasepp_plus,
    f_chaselk, lower_bound, optimal_threshold, pr_s, r_off, r_on, ratio_report,
    realize_delta_trace, LowerBoundResult, RatioError, RatioReport, RatioRow, ThresholdResult,
};
pub use segments::{
    advance_capped, brute_force_optimal, capped_series, decompose, delta, dp_optimal, dp_plan,
    offline_optimal, CriticalSegment, DeltaSeries, SegmentError, SegmentKind,
};
