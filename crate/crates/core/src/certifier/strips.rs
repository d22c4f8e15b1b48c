use super::cones::{cone_image_margin, grid, vertical_cone_image_margin};
use super::schedule::BoxDims;
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use serde::{Deserialize, Serialize};

pub const DEFAULT_REFINE_BUDGET: usize = 1 << 16;
const INITIAL_SAMPLES: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StripKind {
    Vertical,
    Horizontal,
}

/// Polyline graph with a certified Lipschitz constant.
///
/// Horizontal graphs store `(v, φ(v))` sorted by `v`; vertical graphs store
/// `(ψ(w), w)` sorted by `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    pub points: Vec<Vec2>,
    pub lipschitz: f64,
}

impl Graph {
    fn key(kind: StripKind, p: Vec2) -> (f64, f64) {
        match kind {
            StripKind::Horizontal => (p.x, p.y),
            StripKind::Vertical => (p.y, p.x),
        }
    }

    /// Graph value at parameter `t` by linear interpolation, clamped to the ends.
    pub fn value(&self, kind: StripKind, t: f64) -> f64 {
        let pts = &self.points;
        let i = pts.partition_point(|p| Self::key(kind, *p).0 < t);
        if i == 0 {
            return Self::key(kind, pts[0]).1;
        }
        if i == pts.len() {
            return Self::key(kind, pts[i - 1]).1;
        }
        let (t0, y0) = Self::key(kind, pts[i - 1]);
        let (t1, y1) = Self::key(kind, pts[i]);
        if t1 == t0 {
            return y1;
        }
        y0 + (y1 - y0) * (t - t0) / (t1 - t0)
    }

    pub fn range(&self, kind: StripKind) -> (f64, f64) {
        (Self::key(kind, self.points[0]).0, Self::key(kind, *self.points.last().unwrap()).0)
    }
}

/// Region of a box bounded by two graphs of the same kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub parent: BoxDims,
    pub kind: StripKind,
    /// Left then right (vertical) or lower then upper (horizontal).
    pub graphs: [Graph; 2],
    /// Relative clearance from the parent's boundary pieces it must avoid.
    pub interior_margin: f64,
}

struct Sample {
    t: f64,
    y: f64,
    slopes: (f64, f64),
    /// Bound on the change of the certified slope per unit of `t`.
    rate: f64,
}

/// A sample for [`adaptive`]: `noise` is the magnitude whose rounding
/// affects `y`, `gain` converts the slope limit into this parametrisation.
struct Eval {
    y: f64,
    slopes: (f64, f64),
    noise: f64,
    gain: f64,
    rate: f64,
}

const NOISE_ULPS: f64 = 16.0;

/// Largest slope over the polyline: on each segment the endpoint slopes plus
/// the slope-variation bound times the segment length.
fn lipschitz_certificate(s: &[Sample]) -> f64 {
    s.windows(2)
        .map(|w| w[0].slopes.1.abs().max(w[1].slopes.0.abs()) + w[0].rate.max(w[1].rate) * (w[1].t - w[0].t).abs())
        .fold(0.0, f64::max)
}

/// Adaptive sampling of `t ↦ (y, slopes)` on `[t0, t1]`.
fn adaptive(
    t0: f64,
    t1: f64,
    limit: f64,
    budget: usize,
    stage: &str,
    breaks: &[f64],
    mut f: impl FnMut(f64) -> Result<Eval>,
) -> Result<Vec<Sample>> {
    let mut ts: Vec<f64> =
        (0..INITIAL_SAMPLES).map(|i| t0 + (t1 - t0) * i as f64 / (INITIAL_SAMPLES - 1) as f64).collect();
    let breaks: Vec<f64> = breaks.iter().copied().filter(|b| *b > t0 && *b < t1).collect();
    let near = 1e-9 * (t1 - t0).abs();
    ts.retain(|t| breaks.iter().all(|b| (t - b).abs() > near));
    ts.extend(breaks);
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut s = Vec::with_capacity(ts.len());
    for t in ts {
        s.push((t, f(t)?));
    }
    loop {
        let mut next = Vec::with_capacity(s.len() * 2);
        let mut refined = false;
        for i in 0..s.len() {
            if i > 0 {
                let ((ta, a), (tb, b)) = (&s[i - 1], &s[i]);
                let sec = (b.y - a.y) / (tb - ta);
                let avg = 0.5 * (a.slopes.1 + b.slopes.0);
                let tol = 0.01 * limit * a.gain.min(b.gain);
                // secants cannot resolve below the rounding of the sampled values
                let floor = NOISE_ULPS * f64::EPSILON * a.noise.max(b.noise) / (tb - ta);
                let tm = 0.5 * (ta + tb);
                let coarse = a.rate.max(b.rate) * (tb - ta) > 0.01 * limit;
                if ((b.slopes.0 - a.slopes.1).abs() > tol || (sec - avg).abs() > tol + floor || coarse)
                    && tm > *ta
                    && tm < *tb
                {
                    next.push((tm, f(tm)?));
                    refined = true;
                }
            }
            let (t, e) = &s[i];
            next.push((*t, Eval { ..*e }));
        }
        s = next;
        if !refined {
            return Ok(s.into_iter().map(|(t, e)| Sample { t, y: e.y, slopes: e.slopes, rate: e.rate }).collect());
        }
        if s.len() > budget {
            return Err(Error::StripConstructionFailed {
                stage: stage.into(),
                reason: format!("polyline refinement exceeded budget of {budget} segments"),
            });
        }
    }
}

fn bisect(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maps and derivatives handed to the strip constructions.
pub struct MapPair<'a> {
    pub f: &'a dyn Fn(Vec2) -> Vec2,
    pub df: &'a dyn Fn(Vec2) -> Mat2,
    /// Bound on `‖D²f‖` over the source box.
    pub d2: f64,
}

/// Full vertical graph `{π₁F(p) = target}` of `source`, with Lipschitz bound below `limit`.
pub fn preimage_vertical_graph(
    m: &MapPair,
    source: &BoxDims,
    target: f64,
    limit: f64,
    budget: usize,
    stage: &str,
) -> Result<Graph> {
    let solve = |w: f64| -> Result<f64> {
        let g = |v: f64| (m.f)(Vec2::new(v, w)).x - target;
        let (lo, hi) = (g(-source.r), g(source.r));
        if !(lo < 0.0 && hi > 0.0) {
            return Err(Error::StripConstructionFailed {
                stage: stage.into(),
                reason: format!("boundary images do not bracket {target:e} at w = {w:e}"),
            });
        }
        Ok(bisect(-source.r, source.r, g))
    };
    let end = |sign: f64| -> Result<f64> {
        let mut w = sign * source.tau;
        for _ in 0..16 {
            let v = solve(w)?;
            let nw = sign * source.half_height(v);
            if nw == w {
                break;
            }
            w = nw;
        }
        Ok(w)
    };
    let (w0, w1) = (end(-1.0)?, end(1.0)?);
    let samples = adaptive(w0, w1, limit, budget, &format!("{stage} (vertical graph)"), &[], |w| {
        let v = solve(w)?;
        let j = (m.df)(Vec2::new(v, w));
        let slope = -j.b / j.a;
        let p = Vec2::new(v, w);
        // rounding of the source point is amplified by DF before the root is read off
        let noise = v.abs() + (target.abs() + (m.f)(p).norm() + j.norm() * p.norm()) / j.a.abs();
        let rate = m.d2 * (1.0 + slope.abs()).powi(2) / j.a.abs();
        Ok(Eval { y: v, slopes: (slope, slope), noise, gain: 1.0, rate })
    })?;
    let lipschitz = lipschitz_certificate(&samples);
    if !(lipschitz < limit) {
        return Err(Error::StripConstructionFailed {
            stage: stage.into(),
            reason: format!("vertical graph Lipschitz {lipschitz:e} not below {limit:e}"),
        });
    }
    Ok(Graph { points: samples.iter().map(|s| Vec2::new(s.y, s.t)).collect(), lipschitz })
}

/// Image of the horizontal boundary piece `w = sign·h(v)`, `v ∈ [v0, v1]`.
#[allow(clippy::too_many_arguments)]
pub fn image_horizontal_graph(
    m: &MapPair,
    source: &BoxDims,
    sign: f64,
    v0: f64,
    v1: f64,
    target: &BoxDims,
    limit: f64,
    budget: usize,
    stage: &str,
) -> Result<(Graph, f64)> {
    let fail = |reason: String| Error::StripConstructionFailed { stage: stage.into(), reason };
    let point = |v: f64| Vec2::new(v, sign * source.half_height(v));
    let tangent = |v: f64, side: f64| -> Result<Vec2> {
        let t = (m.df)(point(v)).apply(Vec2::new(1.0, sign * side * source.kappa));
        if !(t.x > 0.0) {
            return Err(fail(format!("image of the boundary folds back at v = {v:e}")));
        }
        Ok(t)
    };
    let sides = |v: f64| if v == 0.0 { (-1.0, 1.0) } else { (v.signum(), v.signum()) };
    // change of the image slope t.y/t.x per unit source parameter
    let image_rate = |t: Vec2| m.d2 * (1.0 + source.kappa * source.kappa) * (1.0 + (t.y / t.x).abs()) / t.x;
    // refinement runs in the source parameter, so slopes are dw̄/dv there
    let samples = adaptive(v0, v1, limit, budget, &format!("{stage} (horizontal graph)"), &[0.0], |v| {
        let (a, b) = sides(v);
        let (ta, tb) = (tangent(v, a)?, tangent(v, b)?);
        let y = (m.f)(point(v));
        let rate = image_rate(ta).max(image_rate(tb));
        let noise = y.norm() + (m.df)(point(v)).norm() * point(v).norm();
        Ok(Eval { y: y.y, slopes: (ta.y, tb.y), noise, gain: ta.x.min(tb.x), rate })
    })?;
    let mut pts: Vec<Vec2> = Vec::with_capacity(samples.len());
    let mut image = Vec::with_capacity(samples.len());
    for s in &samples {
        let y = (m.f)(point(s.t));
        let (a, b) = sides(s.t);
        let (ta, tb) = (tangent(s.t, a)?, tangent(s.t, b)?);
        pts.push(y);
        // rate per unit image length: the image advances at least min(t.x) per unit source
        let rate = s.rate / ta.x.min(tb.x);
        image.push(Sample { t: y.x, y: y.y, slopes: (ta.y / ta.x, tb.y / tb.x), rate });
    }
    if image.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(fail("image is not a graph over the horizontal axis".into()));
    }
    let tol = 1e-9 * target.r;
    if (pts[0].x + target.r).abs() > tol || (pts.last().unwrap().x - target.r).abs() > tol {
        return Err(fail(format!(
            "image endpoints {:e}, {:e} miss the vertical boundary ±{:e}",
            pts[0].x,
            pts.last().unwrap().x,
            target.r
        )));
    }
    let lipschitz = lipschitz_certificate(&image);
    if !(lipschitz < limit) {
        return Err(fail(format!("horizontal graph Lipschitz {lipschitz:e} not below {limit:e}")));
    }
    let margin = pts
        .iter()
        .map(|p| {
            let h = target.half_height(p.x.clamp(-target.r, target.r));
            (h - p.y.abs()) / h
        })
        .fold(f64::INFINITY, f64::min);
    if !(margin > 0.0) {
        return Err(fail(format!("image touches the horizontal boundary (margin {margin:e})")));
    }
    Ok((Graph { points: pts, lipschitz }, margin))
}

/// A vertical strip `R′` of `source` with `F(R′)` a horizontal strip of `target`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripPair {
    pub vertical: Strip,
    pub horizontal: Strip,
    /// Worst `ln` margin of `DF_x(C(k_in)) ⊂ C(k_out)` over `R′`.
    #[serde(with = "crate::format::ext_f64")]
    pub forward_cone_margin: f64,
    /// Worst `ln` margin of `DF⁻¹(C̃(kt_in)) ⊂ C̃(kt_out)` over `F(R′)`.
    #[serde(with = "crate::format::ext_f64")]
    pub backward_cone_margin: f64,
    pub cone_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripLimits {
    pub vertical: f64,
    pub horizontal: f64,
    /// `(k_in, k_out)` for the forward horizontal cone.
    pub forward: (f64, f64),
    /// `(kt_in, kt_out)` for the backward vertical cone.
    pub backward: (f64, f64),
}

pub fn build_strip_pair(
    m: &MapPair,
    source: &BoxDims,
    target: &BoxDims,
    lim: &StripLimits,
    budget: usize,
    stage: &str,
) -> Result<StripPair> {
    let left = preimage_vertical_graph(m, source, -target.r, lim.vertical, budget, stage)?;
    let right = preimage_vertical_graph(m, source, target.r, lim.vertical, budget, stage)?;
    let vk = StripKind::Vertical;
    let (lw0, lw1) = left.range(vk);
    let (rw0, rw1) = right.range(vk);
    let mut gap = f64::INFINITY;
    for p in left.points.iter().chain(&right.points) {
        gap = gap.min(right.value(vk, p.y) - left.value(vk, p.y));
    }
    if !(gap > 0.0) {
        return Err(Error::StripConstructionFailed { stage: stage.into(), reason: "vertical graphs intersect".into() });
    }
    let v_margin = left
        .points
        .iter()
        .map(|p| (p.x + source.r) / source.r)
        .chain(right.points.iter().map(|p| (source.r - p.x) / source.r))
        .fold(f64::INFINITY, f64::min);
    if !(v_margin > 0.0) {
        return Err(Error::StripConstructionFailed {
            stage: stage.into(),
            reason: "vertical graphs touch the vertical boundary".into(),
        });
    }
    let (lower, m_lo) =
        image_horizontal_graph(m, source, -1.0, left.points[0].x, right.points[0].x, target, lim.horizontal, budget, stage)?;
    let (upper, m_up) = image_horizontal_graph(
        m,
        source,
        1.0,
        left.points.last().unwrap().x,
        right.points.last().unwrap().x,
        target,
        lim.horizontal,
        budget,
        stage,
    )?;
    let hk = StripKind::Horizontal;
    let mut hgap = f64::INFINITY;
    for p in lower.points.iter().chain(&upper.points) {
        hgap = hgap.min(upper.value(hk, p.x) - lower.value(hk, p.x));
    }
    if !(hgap > 0.0) {
        return Err(Error::StripConstructionFailed { stage: stage.into(), reason: "horizontal graphs intersect".into() });
    }

    let mut fwd = f64::INFINITY;
    let mut bwd = f64::INFINITY;
    let mut count = 0;
    let (w0, w1) = (lw0.max(rw0), lw1.min(rw1));
    for sw in grid(9) {
        let w = 0.5 * (w0 + w1) + 0.5 * sw * (w1 - w0);
        let (vl, vr) = (left.value(vk, w), right.value(vk, w));
        for sv in grid(9) {
            let v = 0.5 * (vl + vr) + 0.5 * sv * (vr - vl);
            let j = (m.df)(Vec2::new(v, w));
            fwd = fwd.min(cone_image_margin(&j, lim.forward.0, lim.forward.1));
            bwd = bwd.min(vertical_cone_image_margin(&j.inverse(), lim.backward.0, lim.backward.1));
            count += 1;
        }
    }
    Ok(StripPair {
        vertical: Strip { parent: *source, kind: vk, graphs: [left, right], interior_margin: v_margin },
        horizontal: Strip { parent: *target, kind: hk, graphs: [lower, upper], interior_margin: m_lo.min(m_up) },
        forward_cone_margin: fwd,
        backward_cone_margin: bwd,
        cone_samples: count,
    })
}

/// Crossing of a vertical and a horizontal graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub point: Vec2,
    pub sign_changes: usize,
}

/// Crossing of `w = φ(v)` with `v = ψ(w)`: sign changes of `w − φ(ψ(w))` over
/// the vertical samples, then bisection on the interpolants.
pub fn crossing(vertical: &Graph, horizontal: &Graph) -> Crossing {
    let (vk, hk) = (StripKind::Vertical, StripKind::Horizontal);
    let h = |w: f64| w - horizontal.value(hk, vertical.value(vk, w));
    let ws: Vec<f64> = vertical.points.iter().map(|p| p.y).collect();
    let vals: Vec<f64> = ws.iter().map(|&w| h(w)).collect();
    let mut changes = 0;
    let mut bracket = None;
    for i in 1..ws.len() {
        if (vals[i - 1] < 0.0) != (vals[i] < 0.0) {
            changes += 1;
            bracket.get_or_insert((ws[i - 1], ws[i], vals[i - 1] < 0.0));
        }
    }
    let w = match bracket {
        Some((a, b, rising)) => bisect(a, b, |w| if rising { h(w) } else { -h(w) }),
        None => f64::NAN,
    };
    Crossing { point: Vec2::new(vertical.value(vk, w), w), sign_changes: changes }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_graph(kind: StripKind, slope: f64, offset: f64, span: f64) -> Graph {
        let pts = (0..=40)
            .map(|i| {
                let t = -span + 2.0 * span * i as f64 / 40.0;
                match kind {
                    StripKind::Horizontal => Vec2::new(t, offset + slope * t),
                    StripKind::Vertical => Vec2::new(offset + slope * t, t),
                }
            })
            .collect();
        Graph { points: pts, lipschitz: slope.abs() }
    }

    #[test]
    fn unique_crossing_by_bisection() {
        let kb = 0.1;
        let (k, kt) = (kb / 3.0, kb * 3.0);
        let hg = line_graph(StripKind::Horizontal, 0.9 * k, 0.01, 1.0);
        let vg = line_graph(StripKind::Vertical, -0.9 * kt, 0.02, 1.0);
        let c = crossing(&vg, &hg);
        assert_eq!(c.sign_changes, 1);
        // oracle: solve the 2x2 linear system directly
        let (a, b) = (0.9 * k, -0.9 * kt);
        let v = (0.02 + b * 0.01) / (1.0 - a * b);
        let w = 0.01 + a * v;
        assert!((c.point.x - v).abs() < 1e-12 && (c.point.y - w).abs() < 1e-12);
    }

    #[test]
    fn linear_saddle_strips_are_rectangles() {
        let f = |p: Vec2| Vec2::new(2.0 * p.x, 0.5 * p.y);
        let df = |_: Vec2| Mat2::diag(2.0, 0.5);
        let m = MapPair { f: &f, df: &df, d2: 0.0 };
        let src = BoxDims { r: 1.0, tau: 1.0, kappa: 0.01 };
        let tgt = BoxDims { r: 1.0, tau: 1.0, kappa: 0.01 };
        let lim = StripLimits { vertical: 0.01, horizontal: 0.01, forward: (0.01, 0.005), backward: (0.01, 0.01) };
        let sp = build_strip_pair(&m, &src, &tgt, &lim, DEFAULT_REFINE_BUDGET, "test").unwrap();
        let [l, r] = &sp.vertical.graphs;
        assert!(l.points.iter().all(|p| (p.x + 0.5).abs() < 1e-15));
        assert!(r.points.iter().all(|p| (p.x - 0.5).abs() < 1e-15));
        assert_eq!(l.lipschitz, 0.0);
        let [lo, up] = &sp.horizontal.graphs;
        // width of the image is half the source height at v = ±1/2
        let h = src.half_height(0.5);
        assert!((up.value(StripKind::Horizontal, 1.0) - 0.5 * h).abs() < 1e-15);
        assert!((lo.value(StripKind::Horizontal, -1.0) + 0.5 * h).abs() < 1e-15);
        assert!(sp.forward_cone_margin > 0.0 && sp.backward_cone_margin > 0.0);
    }

    #[test]
    fn non_bracketing_fails() {
        let f = |p: Vec2| Vec2::new(0.5 * p.x, 2.0 * p.y);
        let df = |_: Vec2| Mat2::diag(0.5, 2.0);
        let m = MapPair { f: &f, df: &df, d2: 0.0 };
        let b = BoxDims { r: 1.0, tau: 1.0, kappa: 0.01 };
        let e = preimage_vertical_graph(&m, &b, 1.0, 0.01, 64, "t").unwrap_err();
        assert!(matches!(e, Error::StripConstructionFailed { .. }));
    }
}
