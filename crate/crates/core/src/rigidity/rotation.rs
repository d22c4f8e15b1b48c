use crate::error::{Error, Result};
use crate::linalg::{CompensatedSum, Vec2};
use crate::maps::PlanarMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    /// Rotation number in `[0, 1)`.
    pub value: f64,
    /// Iterations per seed.
    pub iterations: usize,
    pub seeds: usize,
    /// Lifted Birkhoff average of each seed (not reduced mod 1).
    pub per_seed: Vec<f64>,
    /// `max − min` of the per-seed averages.
    pub spread: f64,
    /// Total lifted displacement in turns over all seeds.
    pub lift_total: f64,
    /// Total number of steps over all seeds.
    pub steps: u64,
}

impl RotationEstimate {
    /// `Σl / Σn`.
    pub fn lift_ratio(&self) -> f64 {
        self.lift_total / self.steps as f64
    }
}

fn check_rotational(map: &PlanarMap) -> Result<()> {
    if !map.domain.is_rotational() {
        return Err(Error::PreconditionViolated(format!("{} is not defined on a disk or annulus", map.label)));
    }
    Ok(())
}

/// Lifted displacement in turns along `n` steps from `x`.
pub(crate) fn lifted_displacement(map: &PlanarMap, x: Vec2, n: usize) -> Result<f64> {
    let mut p = x;
    let mut acc = CompensatedSum::default();
    for i in 0..n {
        acc.add(map.lift_increment(p).ok_or_else(|| Error::PreconditionViolated("no angular lift".into()))?);
        p = map.eval(p);
        if !map.contains(p) {
            return Err(Error::DomainEscape { index: i + 1, point: p.to_array() });
        }
    }
    Ok(acc.value())
}

/// Birkhoff averages of the lifted angular displacement about the origin.
pub fn rotation_number(map: &PlanarMap, seeds: &[Vec2], n: usize) -> Result<RotationEstimate> {
    check_rotational(map)?;
    if seeds.is_empty() || n == 0 {
        return Err(Error::InvalidParameter("rotation_number needs seeds and n >= 1".into()));
    }
    if let Some(s) = seeds.iter().find(|s| s.norm() == 0.0 || !map.contains(**s)) {
        return Err(Error::PreconditionViolated(format!("seed ({}, {}) is the origin or outside the domain", s.x, s.y)));
    }
    let lifts = seeds.par_iter().map(|s| lifted_displacement(map, *s, n)).collect::<Result<Vec<_>>>()?;
    let per_seed: Vec<f64> = lifts.iter().map(|l| l / n as f64).collect();
    let mut total = CompensatedSum::default();
    lifts.iter().for_each(|l| total.add(*l));
    let steps = (n * seeds.len()) as u64;
    let lo = per_seed.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = per_seed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let value = (total.value() / steps as f64).rem_euclid(1.0);
    Ok(RotationEstimate {
        value: if value >= 1.0 { 0.0 } else { value },
        iterations: n,
        seeds: seeds.len(),
        per_seed,
        spread: hi - lo,
        lift_total: total.value(),
        steps,
    })
}

/// `count` seeds on the ray segment `[0.1, 0.9]·R` at golden-angle spacing.
pub fn default_seeds(map: &PlanarMap, count: usize) -> Vec<Vec2> {
    let (_, x1, _, _) = map.domain.bounding_box();
    let inner = match map.domain {
        crate::maps::Domain::Annulus { inner, .. } => inner,
        _ => 0.0,
    };
    let golden = std::f64::consts::TAU * (3.0 - 5f64.sqrt()) / 2.0;
    (0..count)
        .filter_map(|i| {
            let t = if count == 1 { 0.5 } else { i as f64 / (count - 1) as f64 };
            let r = inner + (x1 - inner) * (0.1 + 0.8 * t);
            let a = golden * i as f64;
            let p = Vec2::new(r * a.cos(), r * a.sin());
            map.contains(p).then_some(p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rigid_rotation_is_exact() {
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", 0.1)]).unwrap();
        let seeds = default_seeds(&f, 16);
        assert_eq!(seeds.len(), 16);
        let r = rotation_number(&f, &seeds, 10_000).unwrap();
        assert_eq!(r.value, 0.1);
        assert_eq!(r.spread, 0.0);
        assert_eq!(r.steps, 160_000);
    }

    #[test]
    fn polar_twist_spread_is_profile_range() {
        let f = PlanarMap::from_name("polar-twist", &[("rho0", 0.1), ("rho1", 0.2)]).unwrap();
        let seeds = [Vec2::new(0.2, 0.0), Vec2::new(0.0, 0.8)];
        let r = rotation_number(&f, &seeds, 500).unwrap();
        assert!((r.per_seed[0] - (0.1 + 0.2 * 0.04)).abs() < 1e-12);
        assert!((r.per_seed[1] - (0.1 + 0.2 * 0.64)).abs() < 1e-12);
        assert!((r.spread - 0.2 * 0.6).abs() < 1e-12);
    }

    #[test]
    fn perturbed_twist_doubling_consistency() {
        let f = PlanarMap::from_name("perturbed-twist", &[("eps", 0.2071)]).unwrap();
        let seeds = default_seeds(&f, 16);
        let n = 4000;
        let a = rotation_number(&f, &seeds, n).unwrap();
        let b = rotation_number(&f, &seeds, 2 * n).unwrap();
        assert!(a.spread < 10.0 / n as f64, "{}", a.spread);
        assert!((a.value - b.value).abs() < 1e-3);
        assert!((a.value - 0.2071).abs() < 1e-3);
    }

    #[test]
    fn torus_and_origin_rejected() {
        let f = PlanarMap::from_name("standard-map", &[("k", 1.0)]).unwrap();
        assert!(matches!(rotation_number(&f, &[Vec2::new(0.3, 0.3)], 10), Err(Error::PreconditionViolated(_))));
        let g = PlanarMap::from_name("rigid-rotation", &[("eps", 0.1)]).unwrap();
        assert!(matches!(rotation_number(&g, &[Vec2::default()], 10), Err(Error::PreconditionViolated(_))));
    }
}
