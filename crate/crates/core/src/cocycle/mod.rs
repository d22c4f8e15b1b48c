//! Exponent sequences along orbits, Pliss selection and `(q, a)`-good points.

mod goodpoint;
mod trace;
mod windows;

pub use goodpoint::{
    default_match_radius, find_good_point, unit_tangent_distance, GoodPointCertificate, GoodPointSearch, SearchOptions,
    SearchStats,
};
pub use trace::{most_contracting, stable_trace, trace, CocycleTrace, TangentTriple};
pub use windows::{
    check_good_triple, cot_recursion_bound, good_consequences, good_in_orbit_brute, good_in_orbit_trace, pliss_indices,
    ConsequenceReport, CotEnvelope, Direction, GoodCheck, PlissSelection, Violation, GOOD_FACTOR,
};

use crate::error::Result;
use crate::linalg::Vec2;
use crate::maps::PlanarMap;

/// Good-in-orbit indices for the most contracting triple at `x` with horizon `q`.
pub fn good_in_orbit(map: &PlanarMap, x: Vec2, q: usize, a: f64) -> Result<Vec<usize>> {
    let (_, tr) = stable_trace(map, x, q)?;
    Ok(good_in_orbit_trace(&tr, a))
}
