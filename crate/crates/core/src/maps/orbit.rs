use super::PlanarMap;
use crate::error::{Error, Result};
use crate::linalg::{LogScaledProduct, Mat2, Vec2};
use crate::maps::Domain;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Finite orbit `x_0, …, x_n` with `Dg(x_i)` for `i < n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub points: Vec<Vec2>,
    pub jacobians: Vec<Mat2>,
}

impl Orbit {
    pub fn len(&self) -> usize {
        self.jacobians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jacobians.is_empty()
    }

    /// `Dg^n(x_0)` as a log-scaled product.
    pub fn product(&self) -> LogScaledProduct {
        let mut p = LogScaledProduct::default();
        for j in &self.jacobians {
            p.push_left(j);
        }
        p
    }
}

pub fn iterate(map: &PlanarMap, x0: Vec2, n: usize) -> Result<Orbit> {
    let mut x = map.domain.reduce(x0);
    if !map.contains(x) {
        return Err(Error::DomainEscape { index: 0, point: x.to_array() });
    }
    let mut points = Vec::with_capacity(n + 1);
    let mut jacobians = Vec::with_capacity(n);
    points.push(x);
    for i in 1..=n {
        jacobians.push(map.jacobian(x));
        x = map.eval(x);
        if !map.contains(x) {
            return Err(Error::DomainEscape { index: i, point: x.to_array() });
        }
        points.push(x);
    }
    Ok(Orbit { points, jacobians })
}

/// `(1/n) log ‖Dg^n(x)‖`.
pub fn growth_rate(map: &PlanarMap, x: Vec2, n: usize) -> Result<f64> {
    Ok(log_norms(map, x, &[n])?[0] / n as f64)
}

/// `log ‖Dg^n(x)‖` at every `n` of an ascending list.
fn log_norms(map: &PlanarMap, x0: Vec2, ns: &[usize]) -> Result<Vec<f64>> {
    let mut x = map.domain.reduce(x0);
    if !map.contains(x) {
        return Err(Error::DomainEscape { index: 0, point: x.to_array() });
    }
    let mut prod = LogScaledProduct::default();
    let mut out = Vec::with_capacity(ns.len());
    let mut step = 0usize;
    for &n in ns {
        while step < n {
            prod.push_left(&map.jacobian(x));
            x = map.eval(x);
            step += 1;
            if !map.contains(x) {
                return Err(Error::DomainEscape { index: step, point: x.to_array() });
            }
        }
        out.push(prod.log_norm());
    }
    Ok(out)
}

/// Vertex-aligned sampling grid over the domain's bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        GridSpec { nx: n, ny: n }
    }

    /// Grid points inside the domain, row-major. Periodic domains use `i/n`;
    /// others include both box edges.
    pub fn points(&self, domain: &Domain) -> Vec<Vec2> {
        let (x0, x1, y0, y1) = domain.bounding_box();
        let coord = |lo: f64, hi: f64, n: usize, i: usize| {
            if domain.is_periodic() {
                lo + (hi - lo) * i as f64 / n as f64
            } else if n == 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        let mut pts = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                let p = Vec2::new(coord(x0, x1, self.nx, i), coord(y0, y1, self.ny, j));
                if domain.contains(p) {
                    pts.push(p);
                }
            }
        }
        pts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: usize,
    /// `log sup_x ‖Dg^n(x)‖` over the sampled points (a lower bound for the true sup).
    pub log_sup_norm: f64,
    /// `(1/n) log sup_x ‖Dg^n(x)‖`.
    pub rate: f64,
    pub argmax: Vec2,
    pub points: usize,
}

/// Sampled sup of `‖Dg^n‖` over `points` for each `n` in the ascending `ns`.
///
/// Points are processed in parallel; the reduction runs in point order, so
/// the result does not depend on the thread count.
pub fn derivative_growth(map: &PlanarMap, ns: &[usize], points: &[Vec2]) -> Result<Vec<GrowthRow>> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(Error::InvalidParameter("n_list must be nonempty, positive and strictly ascending".into()));
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("empty sample grid".into()));
    }
    let per_point: Vec<Result<Vec<f64>>> = points
        .par_iter()
        .map(|&p| {
            log_norms(map, p, ns).map_err(|e| e.at_stage(&format!("derivative_growth from grid point ({}, {})", p.x, p.y)))
        })
        .collect();
    let mut best: Vec<(f64, usize)> = vec![(f64::NEG_INFINITY, 0); ns.len()];
    for (i, r) in per_point.into_iter().enumerate() {
        let logs = r?;
        for (b, l) in best.iter_mut().zip(logs) {
            if l > b.0 {
                *b = (l, i);
            }
        }
    }
    Ok(ns
        .iter()
        .zip(best)
        .map(|(&n, (l, i))| GrowthRow { n, log_sup_norm: l, rate: l / n as f64, argmax: points[i], points: points.len() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_iterates() {
        let f = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
        let o = iterate(&f, Vec2::new(1.0, 1.0), 3).unwrap();
        assert_eq!(o.points[1..], [Vec2::new(2.0, 0.5), Vec2::new(4.0, 0.25), Vec2::new(8.0, 0.125)]);
        match iterate(&f, Vec2::new(1.0, 1.0), 10) {
            Err(Error::DomainEscape { index, .. }) => assert_eq!(index, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_contains_origin_for_odd_sizes() {
        let f = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
        assert!(GridSpec::square(5).points(&f.domain).contains(&Vec2::new(0.0, 0.0)));
        assert!(GridSpec::square(4).points(&Domain::Torus).contains(&Vec2::new(0.0, 0.0)));
    }

    #[test]
    fn growth_of_saddle_and_rotation() {
        let f = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
        let rows = derivative_growth(&f, &[1, 10, 100], &[Vec2::new(0.0, 0.0)]).unwrap();
        for r in rows {
            assert!((r.rate - 2f64.ln()).abs() < 1e-14);
        }
        let g = PlanarMap::from_name("rigid-rotation", &[("eps", 0.1)]).unwrap();
        let rows = derivative_growth(&g, &[5, 50], &GridSpec::square(9).points(&g.domain)).unwrap();
        assert!(rows.iter().all(|r| r.rate.abs() < 1e-14));
        assert!(derivative_growth(&g, &[5, 5], &[Vec2::new(0.0, 0.0)]).is_err());
    }
}
