//! Finitary closing-lemma and rigidity machinery for area-preserving planar maps.
//!
//! The crate is organised bottom-up:
//!
//! * [`arithmetic`]: exact continued fractions, Brjuno sums and the
//!   non-Brjuno subsequence extraction.
//! * [`maps`]: the catalog of area-preserving maps, orbits and derivative growth.
//! * [`cocycle`]: exponent sequences along orbits, Pliss selection and the
//!   search for `(q, a)`-good points.
//! * [`certifier`]: box/cone schedules, strip concatenation, the return map and
//!   the hyperbolic-like verification producing a hyperbolic periodic point.
//! * [`rigidity`]: rotation numbers, displacement / free-disc / Kac statistics,
//!   Hölder rigidity tables and the growth-gap scan.
//!
//! Everything numeric is `f64`; continued fractions use exact big rationals.

// Negated comparisons are used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arithmetic;
pub mod certifier;
pub mod cocycle;
pub mod error;
pub mod format;
pub mod linalg;
pub mod maps;
pub mod pipeline;
pub mod rigidity;
pub mod seeds;

pub use arithmetic::{ContinuedFraction, IrrationalSpec};
pub use certifier::{BoxSchedule, HyperbolicityCertificate};
pub use cocycle::{CocycleTrace, GoodPointCertificate, TangentTriple};
pub use error::{Error, Result};
pub use linalg::{Mat2, Vec2};
pub use maps::{Domain, MapSpec, Orbit, PlanarMap};

/// Crate version, recorded in summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Schema version written into every certificate and summary.
pub const SCHEMA_VERSION: u32 = 1;
