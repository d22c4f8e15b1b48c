use crate::cocycle::CocycleTrace;
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use crate::maps::PlanarMap;
use serde::{Deserialize, Serialize};

/// `i_n(a, b) = a·v^u_n + b·v^s_n`, anchored at `x_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMap {
    pub origin: Vec2,
    pub mat: Mat2,
    pub inv: Mat2,
}

impl FrameMap {
    pub fn new(origin: Vec2, v_u: Vec2, v_s: Vec2) -> Self {
        let mat = Mat2::from_columns(v_u, v_s);
        FrameMap { origin, mat, inv: mat.inverse() }
    }

    /// Chart displacement of frame coordinates.
    pub fn apply(&self, ab: Vec2) -> Vec2 {
        self.mat.apply(ab)
    }

    /// Frame coordinates of a chart displacement.
    pub fn pull(&self, d: Vec2) -> Vec2 {
        self.inv.apply(d)
    }

    pub fn condition_number(&self) -> f64 {
        let s = self.mat.svd();
        s.sigma_max / s.sigma_min
    }
}

/// Frame map at step `n`; fails if `ln|cot∠| > ln β̄`.
pub fn frame_map(trace: &CocycleTrace, n: usize, ln_beta_bar: Option<f64>) -> Result<FrameMap> {
    if n > trace.len() {
        return Err(Error::InvalidParameter(format!("frame index {n} beyond trace length {}", trace.len())));
    }
    let cot = trace.cot[n];
    if !cot.is_finite() || ln_beta_bar.is_some_and(|b| cot.abs().ln() > b) {
        return Err(Error::DegenerateFrame { step: n, cot });
    }
    Ok(FrameMap::new(trace.points[n], trace.v_u[n], trace.v_s[n]))
}

pub const C0_FORMULA: &str = "C0 = max_n |i_n|^2 |i_{n+1}^-1| / max(|cot(n+1)|, 1)";

/// Chart constant with `‖D²g_n‖ ≤ C₀·D·max(|cot∠_{n+1}|, 1)`.
pub fn chart_constant(trace: &CocycleTrace) -> f64 {
    let mut c0 = 0.0f64;
    for n in 0..trace.len() {
        let a = Mat2::from_columns(trace.v_u[n], trace.v_s[n]).norm();
        let b = Mat2::from_columns(trace.v_u[n + 1], trace.v_s[n + 1]).inverse().norm();
        c0 = c0.max(a * a * b / trace.cot[n + 1].abs().max(1.0));
    }
    c0
}

/// The conjugated maps `g_n`, their composition `G'`, the return map `I` and
/// `G = I∘G'`, all in frame coordinates.
#[derive(Debug, Clone)]
pub struct FrameChain<'a> {
    pub map: &'a PlanarMap,
    pub trace: &'a CocycleTrace,
    pub frames: Vec<FrameMap>,
    /// `f(x_n) − x_{n+1}` in the chart; zero along a genuine orbit.
    corrections: Vec<Vec2>,
    /// `x_L − x_0` in the chart.
    closing: Vec2,
}

impl<'a> FrameChain<'a> {
    pub fn new(map: &'a PlanarMap, trace: &'a CocycleTrace) -> Result<Self> {
        let frames = (0..=trace.len()).map(|n| frame_map(trace, n, None)).collect::<Result<Vec<_>>>()?;
        let corrections = (0..trace.len())
            .map(|n| map.domain.difference(map.eval(trace.points[n]), trace.points[n + 1]))
            .collect();
        let closing = map.domain.difference(trace.points[trace.len()], trace.points[0]);
        Ok(FrameChain { map, trace, frames, corrections, closing })
    }

    pub fn len(&self) -> usize {
        self.trace.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trace.is_empty()
    }

    fn offset_step(&self, n: usize, d: Vec2) -> Vec2 {
        self.map.eval_offset(self.trace.points[n], d) + self.corrections[n]
    }

    /// `g_n(v, w)`.
    pub fn step(&self, n: usize, p: Vec2) -> Vec2 {
        let d = self.frames[n].apply(p);
        self.frames[n + 1].pull(self.offset_step(n, d))
    }

    pub fn step_jacobian(&self, n: usize, p: Vec2) -> Mat2 {
        let x = self.trace.points[n] + self.frames[n].apply(p);
        self.frames[n + 1].inv * self.map.jacobian(x) * self.frames[n].mat
    }

    /// `G' = g_{L−1}∘…∘g_0` through chart offsets.
    pub fn composed(&self, p: Vec2) -> Vec2 {
        let mut d = self.frames[0].apply(p);
        for n in 0..self.len() {
            d = self.offset_step(n, d);
        }
        self.frames[self.len()].pull(d)
    }

    pub fn composed_jacobian(&self, p: Vec2) -> Mat2 {
        let mut d = self.frames[0].apply(p);
        let mut j = Mat2::IDENTITY;
        for n in 0..self.len() {
            j = self.map.jacobian(self.trace.points[n] + d) * j;
            d = self.offset_step(n, d);
        }
        self.frames[self.len()].inv * j * self.frames[0].mat
    }

    /// Bound on `‖D²G'‖` over the ball of radius `rho0` about the origin.
    ///
    /// Chain rule over the steps with `‖D²g_n‖ ≤ ‖i_{n+1}⁻¹‖·d2·‖i_n‖²` and
    /// `‖Dg_n‖` bounded on the image ball of the previous steps.
    pub fn second_derivative_bound(&self, rho0: f64) -> f64 {
        let d2 = self.map.d2_bound;
        let (mut rho, mut p, mut k) = (rho0, 1.0f64, 0.0f64);
        for n in 0..self.len() {
            let d2n = self.frames[n + 1].inv.norm() * d2 * self.frames[n].mat.norm().powi(2);
            let jsup = self.step_jacobian(n, Vec2::default()).norm() + d2n * rho;
            k = d2n * p * p + jsup * k;
            p *= jsup;
            rho = jsup * rho + self.frames[n + 1].pull(self.corrections[n]).norm();
        }
        k
    }

    /// `I = i_0⁻¹ ∘ (translation x_L → x_0) ∘ i_L`.
    pub fn return_map(&self, y: Vec2) -> Vec2 {
        self.frames[0].pull(self.closing + self.frames[self.len()].apply(y))
    }

    pub fn return_jacobian(&self) -> Mat2 {
        self.frames[0].inv * self.frames[self.len()].mat
    }

    /// `G = I∘G'`.
    pub fn full(&self, p: Vec2) -> Vec2 {
        self.return_map(self.composed(p))
    }

    pub fn full_jacobian(&self, p: Vec2) -> Mat2 {
        self.return_jacobian() * self.composed_jacobian(p)
    }

    /// `x_L − x_0` in the chart.
    pub fn closing(&self) -> Vec2 {
        self.closing
    }

    /// Chart point `x_0 + i_0(p)`.
    pub fn to_chart(&self, p: Vec2) -> Vec2 {
        self.trace.points[0] + self.frames[0].apply(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::stable_trace;
    use approx::assert_relative_eq;

    #[test]
    fn orthonormal_frame_is_isometry() {
        let f = FrameMap::new(Vec2::default(), Vec2::new(0.6, 0.8), Vec2::new(-0.8, 0.6));
        assert_relative_eq!(f.condition_number(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn oblique_frame_condition_number() {
        let th = std::f64::consts::FRAC_PI_4;
        let f = FrameMap::new(Vec2::default(), Vec2::new(1.0, 0.0), Vec2::new(th.cos(), th.sin()));
        let expect = ((1.0 + th.cos()) / (1.0 - th.cos())).sqrt();
        assert_relative_eq!(f.condition_number(), expect, max_relative = 1e-12);
    }

    #[test]
    fn steps_fix_the_origin() {
        let f = PlanarMap::from_name("standard-map", &[("k", 6.0)]).unwrap();
        let (_, t) = stable_trace(&f, Vec2::new(0.3, 0.2), 12).unwrap();
        let chain = FrameChain::new(&f, &t).unwrap();
        for n in 0..12 {
            assert_eq!(chain.step(n, Vec2::default()), Vec2::default());
        }
        let j = chain.step_jacobian(3, Vec2::default());
        assert_relative_eq!(j.a.abs().ln(), t.lambda_u[3], epsilon = 1e-9);
        assert_relative_eq!(j.d.abs().ln(), t.lambda_s[3], epsilon = 1e-9);
        assert!(j.c.abs() < 1e-9 && j.b.abs() < 1e-9 * j.a.abs());
    }

    #[test]
    fn degenerate_frame_rejected() {
        let f = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
        let (_, mut t) = stable_trace(&f, Vec2::default(), 4).unwrap();
        t.cot[0] = 1e9;
        assert!(matches!(frame_map(&t, 0, Some(10.0)), Err(Error::DegenerateFrame { step: 0, .. })));
    }
}
