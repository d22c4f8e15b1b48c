//! Rotation numbers, displacement / free-disc / Kac statistics, Hölder
//! rigidity tables and the growth-gap scan.

mod displacement;
mod freedisc;
mod holder;
mod kac;
mod rotation;
mod scan;

pub use displacement::{displacement_bound, DisplacementReport, BALL_SAMPLES};
pub use freedisc::{
    free_disc_search, rigid_rotation_free_measure, room, sample_domain, trial_rng, Disc, FreeDiscReport, FreeDiscTrial,
    BOUNDARY_SAMPLES, GATE_SEEDS, GATE_SPREAD, INTERIOR_SAMPLES, SLACK,
};
pub use holder::{holder_bound_direct, holder_ln_bound, holder_rigidity_check, HolderReport, HolderRow, DEFAULT_ITERATION_BUDGET};
pub use kac::{kac_return_stats, KacReport};
pub use rotation::{default_seeds, rotation_number, RotationEstimate};
pub use scan::{growth_gap_scan, sequence_violations, GrowthGapReport, Handoff, ScanOptions, ScanRow};
