use super::rotation::{default_seeds, rotation_number, RotationEstimate};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::maps::{Domain, PlanarMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Assertions conditioned on pseudo-rotation hypotheses need a rotation
/// number spread below this across at least `GATE_SEEDS` seeds.
pub const GATE_SPREAD: f64 = 1e-3;
pub const GATE_SEEDS: usize = 16;
/// Relative slack on the area comparison and the Kac statistic.
pub const SLACK: f64 = 0.05;

pub const BOUNDARY_SAMPLES: usize = 64;
pub const INTERIOR_SAMPLES: usize = 17;
const BISECTIONS: usize = 24;
const TOP_TRIALS: usize = 32;

/// A Euclidean disc in the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disc {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disc {
    pub fn center(&self) -> Vec2 {
        Vec2::new(self.center[0], self.center[1])
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn contains(&self, domain: &Domain, p: Vec2) -> bool {
        domain.distance(p, self.center()) < self.radius
    }

    /// Whether the closed disc lies in `domain` (up to the inscribed-radius bound).
    pub fn inside(&self, domain: &Domain) -> bool {
        domain.contains(self.center()) && self.radius <= room(domain, self.center())
    }
}

/// Lower bound for the radius of a disc about `c` contained in `domain`.
pub fn room(domain: &Domain, c: Vec2) -> f64 {
    match *domain {
        Domain::Disk { radius } => radius - c.norm(),
        Domain::Annulus { inner, outer } => (outer - c.norm()).min(c.norm() - inner),
        Domain::PlaneChart { xmin, xmax, ymin, ymax } => (c.x - xmin).min(xmax - c.x).min(c.y - ymin).min(ymax - c.y),
        Domain::Torus => 0.5,
        Domain::ShearedDisk { radius, amp } => {
            let pre = Vec2::new(c.x, c.y - amp * c.x * c.x);
            let lip = Mat2::new(1.0, 0.0, 2.0 * amp.abs() * radius, 1.0).norm();
            (radius - pre.norm()) / lip
        }
    }
    .max(0.0)
}

/// Whether sampled points of `D` all map outside `D`.
fn looks_free(map: &PlanarMap, c: Vec2, r: f64) -> bool {
    let disc = Disc { center: c.to_array(), radius: r };
    let outside = |p: Vec2| !disc.contains(&map.domain, map.eval(p));
    if !outside(c) {
        return false;
    }
    let ring = |rad: f64, k: usize| (0..k).map(move |i| {
        let a = TAU * i as f64 / k as f64;
        c + Vec2::new(rad * a.cos(), rad * a.sin())
    });
    ring(r, BOUNDARY_SAMPLES).all(outside) && ring(0.5 * r, INTERIOR_SAMPLES - 1).all(outside)
}

/// Largest `r ≤ room` with `looks_free(c, r)`, by bisection.
fn free_radius(map: &PlanarMap, c: Vec2) -> f64 {
    let hi0 = room(&map.domain, c);
    if hi0 <= 0.0 {
        return 0.0;
    }
    if looks_free(map, c, hi0) {
        return hi0;
    }
    let (mut lo, mut hi) = (0.0, hi0);
    for _ in 0..BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if looks_free(map, c, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Per-trial generator: stream `trial` of the ChaCha8 key derived from `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Uniform point of `domain` by rejection from its bounding box.
pub fn sample_domain(domain: &Domain, rng: &mut ChaCha8Rng) -> Option<Vec2> {
    let (x0, x1, y0, y1) = domain.bounding_box();
    (0..1000).find_map(|_| {
        let p = Vec2::new(rng.gen_range(x0..x1), rng.gen_range(y0..y1));
        domain.contains(p).then_some(p)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeDiscTrial {
    pub trial: u64,
    pub center: [f64; 2],
    pub radius: f64,
    /// Area normalized by the domain area.
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeDiscReport {
    pub eps: f64,
    pub trials: u64,
    pub horizon: usize,
    pub rng_seed: u64,
    pub boundary_samples: usize,
    pub interior_samples: usize,
    pub bisections: usize,
    /// Largest free disc found; `None` if no trial found one.
    pub best: Option<FreeDiscTrial>,
    /// Normalized area of the best disc (0 when none was found).
    pub sup_measure: f64,
    /// Exact value of the sup for rigid rotations of a disk.
    pub closed_form: Option<f64>,
    pub rotation: Option<RotationEstimate>,
    pub pseudo_rotation_like: bool,
    pub slack: f64,
    /// `sup_measure ≤ ε(1 + slack)`, asserted only for pseudo-rotation-like maps.
    pub bound_holds: Option<bool>,
    /// Largest trials, descending.
    pub top: Vec<FreeDiscTrial>,
}

/// Normalized area of the largest disc `D` in the unit disk with `R_ε(D) ∩ D = ∅`.
pub fn rigid_rotation_free_measure(eps: f64) -> f64 {
    let s = (PI * eps).sin().abs();
    let r = s / (1.0 + s);
    r * r
}

fn closed_form(map: &PlanarMap) -> Option<f64> {
    let spec = map.spec();
    if spec.name != "rigid-rotation" || spec.power != 1 || !matches!(map.domain, Domain::Disk { .. }) {
        return None;
    }
    map.params.get("eps").map(|e| rigid_rotation_free_measure(*e))
}

/// Monte-Carlo search for large discs with `f(D) ∩ D = ∅`.
///
/// Centers are uniform in the domain; for each center the free radius is
/// located by bisection up to the inscribed radius. Disjointness is only
/// tested on samples of `D`, so the result is statistical.
pub fn free_disc_search(map: &PlanarMap, eps: f64, trials: u64, horizon: usize, rng_seed: u64) -> Result<FreeDiscReport> {
    if trials == 0 || horizon == 0 {
        return Err(Error::InvalidParameter("trials and horizon must be at least 1".into()));
    }
    let area = map.domain.area();
    let found: Vec<FreeDiscTrial> = (0..trials)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = trial_rng(rng_seed, t);
            let c = sample_domain(&map.domain, &mut rng)?;
            let r = free_radius(map, c);
            (r > 0.0).then(|| FreeDiscTrial { trial: t, center: c.to_array(), radius: r, measure: PI * r * r / area })
        })
        .collect();
    let mut top = found;
    top.sort_by(|a, b| b.measure.total_cmp(&a.measure).then(a.trial.cmp(&b.trial)));
    top.truncate(TOP_TRIALS);
    let best = top.first().copied();
    let sup_measure = best.map_or(0.0, |b| b.measure);

    let rotation = if map.domain.is_rotational() {
        rotation_number(map, &default_seeds(map, GATE_SEEDS), horizon).ok()
    } else {
        None
    };
    let pseudo_rotation_like = rotation.as_ref().is_some_and(|r| r.seeds >= GATE_SEEDS && r.spread < GATE_SPREAD);
    Ok(FreeDiscReport {
        eps,
        trials,
        horizon,
        rng_seed,
        boundary_samples: BOUNDARY_SAMPLES,
        interior_samples: INTERIOR_SAMPLES,
        bisections: BISECTIONS,
        best,
        sup_measure,
        closed_form: closed_form(map),
        rotation,
        pseudo_rotation_like,
        slack: SLACK,
        bound_holds: pseudo_rotation_like.then_some(sup_measure <= eps * (1.0 + SLACK)),
        top,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_rotation_matches_closed_form() {
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", 0.3)]).unwrap();
        let r = free_disc_search(&f, 0.3, 20_000, 64, 7).unwrap();
        let cf = r.closed_form.unwrap();
        assert!((cf - (0.809017 / 1.809017f64).powi(2)).abs() < 1e-6);
        assert!((r.sup_measure - cf).abs() < 0.05 * cf, "{} vs {cf}", r.sup_measure);
        assert!(r.pseudo_rotation_like);
        assert_eq!(r.bound_holds, Some(true));
    }

    #[test]
    fn identity_has_no_free_disc() {
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", 0.0)]).unwrap();
        let r = free_disc_search(&f, 0.0, 2000, 8, 1).unwrap();
        assert_eq!(r.sup_measure, 0.0);
        assert!(r.best.is_none());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", 0.05)]).unwrap();
        let a = free_disc_search(&f, 0.05, 3000, 16, 11).unwrap();
        let b = free_disc_search(&f, 0.05, 3000, 16, 11).unwrap();
        assert_eq!(a, b);
        let c = free_disc_search(&f, 0.05, 3000, 16, 12).unwrap();
        assert_ne!(a.top, c.top);
    }

    #[test]
    fn twist_map_is_not_gated() {
        let f = PlanarMap::from_name("polar-twist", &[("rho0", 0.1), ("rho1", 0.2)]).unwrap();
        let r = free_disc_search(&f, 0.1, 500, 32, 3).unwrap();
        assert!(!r.pseudo_rotation_like);
        assert_eq!(r.bound_holds, None);
    }

    #[test]
    fn room_in_disk_and_chart() {
        assert_eq!(room(&Domain::Disk { radius: 1.0 }, Vec2::new(0.6, 0.0)), 0.4);
        let b = Domain::PlaneChart { xmin: -1.0, xmax: 1.0, ymin: -2.0, ymax: 2.0 };
        assert_eq!(room(&b, Vec2::new(0.5, 1.8)), 0.19999999999999996);
    }
}
