use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::maps::GridSpec;
use crate::maps::PlanarMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Boundary samples per ball when estimating `diam f(B(x, √ε))`.
pub const BALL_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementReport {
    pub eps: f64,
    pub grid: GridSpec,
    pub points: usize,
    pub ball_samples: usize,
    /// `max_x |f(x) − x|` over the grid.
    pub lhs: f64,
    pub lhs_at: [f64; 2],
    /// `max_x diam f(B(x, √ε))` over the grid.
    pub max_ball_diameter: f64,
    /// `√ε + max_ball_diameter`.
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

/// Diameter of the image of the domain part of the circle `|y − x| = r`
/// together with its center.
fn ball_image_diameter(map: &PlanarMap, x: Vec2, r: f64, k: usize) -> f64 {
    let mut img = Vec::with_capacity(k + 1);
    img.push(map.eval(x));
    for i in 0..k {
        let a = TAU * i as f64 / k as f64;
        let y = x + Vec2::new(r * a.cos(), r * a.sin());
        if map.contains(y) {
            img.push(map.eval(y));
        }
    }
    let mut d = 0.0f64;
    for i in 0..img.len() {
        for j in i + 1..img.len() {
            d = d.max(map.domain.distance(img[i], img[j]));
        }
    }
    d
}

/// Sampled check of `‖f − Id‖₀ ≤ √ε + max_x diam f(B(x, √ε))`.
///
/// Reported as data: for maps that are not pseudo-rotations the
/// inequality need not hold.
pub fn displacement_bound(map: &PlanarMap, eps: f64, grid: GridSpec) -> Result<DisplacementReport> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1/4), got {eps}")));
    }
    let pts = grid.points(&map.domain);
    if pts.is_empty() {
        return Err(Error::InvalidParameter("grid has no points in the domain".into()));
    }
    let r = eps.sqrt();
    let rows: Vec<(f64, f64)> = pts
        .par_iter()
        .map(|&x| {
            let y = map.eval(x);
            if !y.is_finite() {
                return Err(Error::DomainEscape { index: 1, point: y.to_array() });
            }
            Ok((map.domain.distance(y, x), ball_image_diameter(map, x, r, BALL_SAMPLES)))
        })
        .collect::<Result<_>>()?;
    let (mut lhs, mut at, mut diam) = (0.0f64, pts[0], 0.0f64);
    for (p, (d, b)) in pts.iter().zip(&rows) {
        if *d > lhs {
            lhs = *d;
            at = *p;
        }
        diam = diam.max(*b);
    }
    let rhs = r + diam;
    Ok(DisplacementReport {
        eps,
        grid,
        points: pts.len(),
        ball_samples: BALL_SAMPLES,
        lhs,
        lhs_at: at.to_array(),
        max_ball_diameter: diam,
        rhs,
        margin: rhs - lhs,
        holds: lhs <= rhs,
    })
}
