//! Continued fractions, Brjuno sums and the non-Brjuno subsequence.

mod brjuno;
mod cf;
mod spec;

pub use brjuno::{
    brjuno_partial_sum, classify, nonbrjuno_subsequence, Block, Classification, ClassificationReport,
    ClassificationThresholds, NonBrjunoSubsequence, Parity,
};
pub use cf::{cf_expand, cf_expand_available, distance_to_integers, ContinuedFraction, IntegerDistance};
pub use spec::IrrationalSpec;
