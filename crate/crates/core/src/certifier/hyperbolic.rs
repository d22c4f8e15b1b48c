use super::frame::FrameChain;
use super::strips::{crossing, Crossing, Strip};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Spectrum, Vec2};
use crate::maps::PlanarMap;
use serde::{Deserialize, Serialize};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 100;
/// Closing tolerance used to detect the prime period.
pub const PERIOD_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingReport {
    pub degree: i64,
    pub samples: usize,
    /// Largest variation bound per unit length among accepted segments.
    pub lipschitz: f64,
    /// Smallest `|G(p) − p|` over the samples.
    pub min_norm: f64,
}

/// Winding number of `f` along a closed polygon.
///
/// `bound(a, b)` bounds `|f(x) − f(a)|` and `|f(x) − f(b)|` for `x ∈ [a, b]`.
/// A segment is accepted once the bound is below `max(|f(a)|, |f(b)|)`, so its
/// image stays in a disc around one endpoint value that misses the origin;
/// otherwise it is bisected.
pub fn winding_number(
    f: &dyn Fn(Vec2) -> Vec2,
    poly: &[Vec2],
    bound: &dyn Fn(Vec2, Vec2) -> f64,
    budget: usize,
) -> Result<WindingReport> {
    let mut total = 0.0;
    let mut samples = 0usize;
    let mut min_norm = f64::INFINITY;
    let mut lipschitz = 0.0f64;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let mut stack = vec![(a, f(a), b, f(b))];
        while let Some((p, fp, q, fq)) = stack.pop() {
            samples += 1;
            if samples > budget {
                return Err(Error::Budget(format!("winding number needs more than {budget} segments")));
            }
            min_norm = min_norm.min(fp.norm()).min(fq.norm());
            if fp.norm() == 0.0 || fq.norm() == 0.0 {
                return Err(Error::StripConstructionFailed {
                    stage: "degree".into(),
                    reason: format!("fixed point on the boundary at {p:?}"),
                });
            }
            let var = bound(p, q);
            if var < fp.norm().max(fq.norm()) {
                total += fp.cross(fq).atan2(fp.dot(fq));
                let len = (q - p).norm();
                if len > 0.0 {
                    lipschitz = lipschitz.max(var / len);
                }
            } else {
                let m = (p + q).scale(0.5);
                if m == p || m == q {
                    return Err(Error::StripConstructionFailed {
                        stage: "degree".into(),
                        reason: "segment cannot be refined further".into(),
                    });
                }
                let fm = f(m);
                stack.push((m, fm, q, fq));
                stack.push((p, fp, m, fm));
            }
        }
    }
    Ok(WindingReport { degree: (total / std::f64::consts::TAU).round() as i64, samples, lipschitz, min_norm })
}

/// Variation bound `2·max ‖(DG − I)(b − a)‖` over the endpoints and midpoint.
pub fn directional_bound(dg: &dyn Fn(Vec2) -> Mat2, a: Vec2, b: Vec2) -> f64 {
    let d = b - a;
    let m = (a + b).scale(0.5);
    let w = |p: Vec2| (dg(p) - Mat2::IDENTITY).apply(d).norm();
    2.0 * w(a).max(w(b)).max(w(m))
}

/// Degree of `G − id` on the boundary of a vertical strip of `U_0`.
pub fn fixed_point_degree(chain: &FrameChain, r1: &Strip, budget: usize) -> Result<WindingReport> {
    let poly = strip_boundary(r1);
    let f = |p: Vec2| chain.full(p) - p;
    let dg = |p: Vec2| chain.full_jacobian(p);
    winding_number(&f, &poly, &|a, b| directional_bound(&dg, a, b), budget)
}

/// Counter-clockwise boundary of a vertical strip.
pub fn strip_boundary(strip: &Strip) -> Vec<Vec2> {
    let [left, right] = &strip.graphs;
    let b = &strip.parent;
    let edge = |v0: f64, v1: f64, sign: f64| -> Vec<Vec2> {
        let mut vs: Vec<f64> = (1..32).map(|i| v0 + (v1 - v0) * i as f64 / 32.0).collect();
        if v0.min(v1) < 0.0 && v0.max(v1) > 0.0 {
            vs.push(0.0);
        }
        vs.sort_by(f64::total_cmp);
        if v0 > v1 {
            vs.reverse();
        }
        vs.into_iter().map(|v| Vec2::new(v, sign * b.half_height(v))).collect()
    };
    let mut poly = Vec::new();
    poly.push(left.points[0]);
    poly.extend(edge(left.points[0].x, right.points[0].x, -1.0));
    poly.extend(right.points.iter().copied());
    let (rt, lt) = (*right.points.last().unwrap(), *left.points.last().unwrap());
    poly.extend(edge(rt.x, lt.x, 1.0));
    poly.extend(left.points.iter().rev().copied());
    poly.pop();
    poly
}

/// `(g^n(z), Dg^n(z))` in the chart.
pub fn iterate_with_jacobian(map: &PlanarMap, z: Vec2, n: usize) -> (Vec2, Mat2) {
    let mut x = z;
    let mut j = Mat2::IDENTITY;
    for _ in 0..n {
        j = map.jacobian(x) * j;
        x = map.eval(x);
    }
    (x, j)
}

pub fn closing_residual(map: &PlanarMap, z: Vec2, n: usize) -> f64 {
    let (x, _) = iterate_with_jacobian(map, z, n);
    map.domain.distance(x, z)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonReport {
    pub start: Vec2,
    pub frame_iterations: usize,
    pub chart_iterations: usize,
    pub damped_steps: usize,
    pub residual: f64,
}

/// Newton on `g^n − id` in the chart with step halving.
pub fn chart_newton(map: &PlanarMap, z0: Vec2, n: usize, tol: f64, max_iter: usize) -> (Vec2, usize, usize, f64) {
    let mut z = z0;
    let mut damped = 0;
    let (x, mut j) = iterate_with_jacobian(map, z, n);
    let mut r = map.domain.difference(x, z);
    let mut iters = 0;
    while iters < max_iter && r.norm() > 0.0 {
        let m = j - Mat2::IDENTITY;
        if m.det() == 0.0 {
            break;
        }
        let step = m.inverse().apply(r);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = map.domain.reduce(z - step.scale(t));
            let (xc, jc) = iterate_with_jacobian(map, cand, n);
            let rc = map.domain.difference(xc, cand);
            if rc.norm() < r.norm() {
                z = cand;
                r = rc;
                j = jc;
                accepted = true;
                break;
            }
            t *= 0.5;
            damped += 1;
        }
        iters += 1;
        if !accepted || r.norm() <= tol * 1e-6 {
            break;
        }
    }
    (z, iters, damped, r.norm())
}

/// Newton on `G − id` in frame coordinates.
fn frame_newton(chain: &FrameChain, p0: Vec2, max_iter: usize) -> (Vec2, usize) {
    let mut p = p0;
    let mut r = chain.full(p) - p;
    let mut iters = 0;
    while iters < max_iter && r.norm() > 0.0 {
        let m = chain.full_jacobian(p) - Mat2::IDENTITY;
        if m.det() == 0.0 {
            break;
        }
        let step = m.inverse().apply(r);
        let cand = p - step;
        let rc = chain.full(cand) - cand;
        iters += 1;
        if !(rc.norm() < r.norm()) {
            break;
        }
        p = cand;
        r = rc;
    }
    (p, iters)
}

/// Smallest divisor `p` of `l` with `|g^p(z) − z| ≤ tol`.
pub fn prime_period(map: &PlanarMap, z: Vec2, l: usize, tol: f64) -> usize {
    (1..=l).filter(|p| l.is_multiple_of(*p)).find(|&p| closing_residual(map, z, p) <= tol).unwrap_or(l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicReport {
    pub winding: WindingReport,
    /// Vertical graphs of `R₁` against horizontal graphs of `R₂`.
    pub crossings: Vec<Crossing>,
    pub newton: NewtonReport,
    pub fixed_point: Vec2,
    pub residual: f64,
    pub return_time: usize,
    pub period: usize,
    pub eigenvalues: Spectrum,
    pub eigenvalues_return: Spectrum,
}

/// Degree, fixed point and spectrum for `G` on `R₁ → R₂`.
pub fn verify_hyperbolic_like(chain: &FrameChain, r1: &Strip, r2: &Strip, budget: usize) -> Result<HyperbolicReport> {
    let mut crossings = Vec::new();
    for v in &r1.graphs {
        for h in &r2.graphs {
            let c = crossing(v, h);
            if c.sign_changes != 1 {
                return Err(Error::StripConstructionFailed {
                    stage: "unique intersection".into(),
                    reason: format!("{} crossings of a vertical and a horizontal graph", c.sign_changes),
                });
            }
            crossings.push(c);
        }
    }
    let winding = fixed_point_degree(chain, r1, budget)?;
    if winding.degree == 0 {
        return Err(Error::DegreeZero);
    }
    let start = crossings.iter().fold(Vec2::default(), |acc, c| acc + c.point).scale(0.25);
    let (p, frame_iterations) = frame_newton(chain, start, NEWTON_MAX_ITER);
    let l = chain.len();
    let map = chain.map;
    let z0 = map.domain.reduce(chain.to_chart(p));
    let (z, chart_iterations, damped_steps, residual) =
        chart_newton(map, z0, l, NEWTON_TOL, NEWTON_MAX_ITER.saturating_sub(frame_iterations));
    if !(residual < NEWTON_TOL) {
        return Err(Error::NewtonDiverged { iterations: frame_iterations + chart_iterations, residual });
    }
    let period = prime_period(map, z, l, PERIOD_TOL);
    let eigenvalues = iterate_with_jacobian(map, z, period).1.spectrum();
    let eigenvalues_return = iterate_with_jacobian(map, z, l).1.spectrum();
    if !eigenvalues.is_hyperbolic() {
        return Err(Error::NonHyperbolicSpectrum(format!("{eigenvalues:?}")));
    }
    Ok(HyperbolicReport {
        winding,
        crossings,
        newton: NewtonReport { start, frame_iterations, chart_iterations, damped_steps, residual },
        fixed_point: z,
        residual,
        return_time: l,
        period,
        eigenvalues,
        eigenvalues_return,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::PlanarMap;

    fn circle(r: f64, n: usize) -> Vec<Vec2> {
        (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                Vec2::new(r * t.cos(), r * t.sin())
            })
            .collect()
    }

    #[test]
    fn saddle_and_rotation_degrees() {
        // analytic: the index of p ↦ (A − I)p is sign det(A − I)
        let lip3 = |a: Vec2, b: Vec2| 3.0 * (b - a).norm();
        let saddle = Mat2::diag(2.0, 0.5) - Mat2::IDENTITY;
        let f = move |p: Vec2| saddle.apply(p);
        let w = winding_number(&f, &circle(1.0, 8), &lip3, 1 << 16).unwrap();
        assert_eq!(w.degree, saddle.det().signum() as i64);
        assert_eq!(w.degree.abs(), 1);
        let rot = Mat2::rotation(0.3) - Mat2::IDENTITY;
        let g = move |p: Vec2| rot.apply(p);
        assert_eq!(winding_number(&g, &circle(1.0, 8), &lip3, 1 << 16).unwrap().degree, 1);
        let h = |p: Vec2| p + Vec2::new(5.0, 0.0);
        assert_eq!(winding_number(&h, &circle(1.0, 8), &lip3, 1 << 16).unwrap().degree, 0);
    }

    #[test]
    fn saddle_fixed_point_by_newton() {
        let f = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
        let (z, _, _, res) = chart_newton(&f, Vec2::new(0.3, -0.2), 1, NEWTON_TOL, NEWTON_MAX_ITER);
        assert!(z.norm() < 1e-15 && res < 1e-15);
        let s = iterate_with_jacobian(&f, z, 1).1.spectrum();
        assert_eq!(s, Spectrum::Real { large: 2.0, small: 0.5 });
        assert_eq!(prime_period(&f, z, 7, PERIOD_TOL), 1);
    }

    #[test]
    fn standard_map_saddle_oracle() {
        // the fixed point at the pendulum's hyperbolic equilibrium is the origin
        let f = PlanarMap::from_name("standard-map", &[("k", 6.0)]).unwrap();
        let (z, _, _, res) = chart_newton(&f, Vec2::new(0.01, 0.005), 1, NEWTON_TOL, NEWTON_MAX_ITER);
        assert!(res < NEWTON_TOL);
        assert!(f.domain.distance(z, Vec2::default()) < 1e-12);
        let s = iterate_with_jacobian(&f, z, 1).1.spectrum();
        assert!((s.product() - 1.0).abs() < 1e-8);
        let mu = 4.0 + 15f64.sqrt();
        assert!((s.moduli().0 - mu).abs() < 1e-10);
    }
}
