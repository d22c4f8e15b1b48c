use super::cones::{cone_image_margin, vertical_cone_image_margin};
use super::frame::{FrameChain, FrameMap};
use super::schedule::BoxSchedule;
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use serde::{Deserialize, Serialize};

/// Default threshold on the return-map deviation, as a multiple of `κ̄`.
pub const RETURN_THRESHOLD_FACTOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnReport {
    /// `sup_{U_L} |I − id| / r̄`.
    pub c0_deviation: f64,
    /// `‖DI − id‖`.
    pub c1_deviation: f64,
    pub deviation: f64,
    pub threshold: f64,
    pub threshold_rule: String,
    /// `DI(C(κ̄/100)) ⊂ C(κ̄/2)`.
    #[serde(with = "crate::format::ext_f64")]
    pub forward_cone_margin: f64,
    /// `DI⁻¹(C̃(2κ̄)) ⊂ C̃(100κ̄)`.
    #[serde(with = "crate::format::ext_f64")]
    pub backward_cone_margin: f64,
    /// `sup π₁I` over the left vertical boundary of `U_L`, in units of `r̄`.
    pub left_clearance: f64,
    /// `inf π₁I` over the right vertical boundary of `U_L`, in units of `r̄`.
    pub right_clearance: f64,
}

impl ReturnReport {
    pub fn clears(&self) -> bool {
        self.left_clearance <= -10.0 && self.right_clearance >= 10.0
    }
}

/// Deviation of `I(y) = i_0⁻¹(closing + i_L y)` from the identity over `U_L`.
///
/// Everything is measured in units of `r̄`; `I` is affine, so extremes over the
/// convex hull of `U_L` sit at its four corners.
pub fn return_report(f0: &FrameMap, fl: &FrameMap, closing: Vec2, s: &BoxSchedule, factor: f64) -> ReturnReport {
    let l = s.len();
    let di = f0.inv * fl.mat;
    let dev_lin = di - Mat2::IDENTITY;
    let shift = f0.pull(closing);
    let sn = shift.norm();
    let scaled_shift = if sn == 0.0 { Vec2::default() } else { shift.scale((sn.ln() - s.r_bar.ln()).exp() / sn) };
    let rl = (s.r[l] - s.r_bar).exp();
    let hl = (s.tau[l] - s.r_bar).exp() + s.kappa[l].exp() * rl;
    let corners = [Vec2::new(-rl, -hl), Vec2::new(-rl, hl), Vec2::new(rl, -hl), Vec2::new(rl, hl)];
    let move_of = |y: Vec2| scaled_shift + dev_lin.apply(y);
    let c0 = corners.iter().map(|&y| move_of(y).norm()).fold(0.0, f64::max);
    let c1 = dev_lin.norm();
    let kb = s.kappa_bar.exp();
    let image_x = |y: Vec2| (scaled_shift + di.apply(y)).x;
    ReturnReport {
        c0_deviation: c0,
        c1_deviation: c1,
        deviation: c0.max(c1),
        threshold: factor * kb,
        threshold_rule: format!("{factor} * kappa_bar"),
        forward_cone_margin: cone_image_margin(&di, kb / 100.0, kb / 2.0),
        backward_cone_margin: vertical_cone_image_margin(&di.inverse(), 2.0 * kb, 100.0 * kb),
        left_clearance: image_x(corners[0]).max(image_x(corners[1])),
        right_clearance: image_x(corners[2]).min(image_x(corners[3])),
    }
}

/// Return-map control along a chain; fails when the deviation exceeds the threshold.
pub fn return_map_check(chain: &FrameChain, s: &BoxSchedule, factor: f64) -> Result<ReturnReport> {
    let l = chain.len();
    let r = return_report(&chain.frames[0], &chain.frames[l], chain.closing(), s, factor);
    if !(r.deviation <= r.threshold) {
        return Err(Error::ReturnMapTooFar { deviation: r.deviation, threshold: r.threshold });
    }
    if !(r.forward_cone_margin > 0.0 && r.backward_cone_margin > 0.0) {
        return Err(Error::ConeCheckFailed {
            step: l,
            which: "return map cone clause".into(),
            margin: r.forward_cone_margin.min(r.backward_cone_margin),
        });
    }
    if !r.clears() {
        return Err(Error::ReturnMapTooFar { deviation: r.left_clearance.max(-r.right_clearance), threshold: -10.0 });
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::super::schedule::{build_schedule, ScheduleParams};
    use super::*;
    use crate::cocycle::stable_trace;
    use crate::maps::PlanarMap;

    fn schedule() -> BoxSchedule {
        let f = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
        let t = stable_trace(&f, Vec2::default(), 40).unwrap().1.segment(0, 8);
        build_schedule(&t, &ScheduleParams { a: 2f64.ln(), d: 2.0, d_nonlin: 0.0, m: 7, c0: 1.0 }).unwrap()
    }

    #[test]
    fn identical_frames_give_identity() {
        let s = schedule();
        let f = FrameMap::new(Vec2::new(0.2, 0.3), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0));
        let r = return_report(&f, &f, Vec2::default(), &s, RETURN_THRESHOLD_FACTOR);
        assert_eq!(r.deviation, 0.0);
        assert!(r.clears());
    }

    #[test]
    fn rotated_frames_match_chord_length() {
        let s = schedule();
        let phi = 1e-6f64;
        let f0 = FrameMap::new(Vec2::default(), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0));
        let (c, sn) = (phi.cos(), phi.sin());
        let fl = FrameMap::new(Vec2::default(), Vec2::new(c, sn), Vec2::new(-sn, c));
        let r = return_report(&f0, &fl, Vec2::default(), &s, RETURN_THRESHOLD_FACTOR);
        assert!((r.c1_deviation - 2.0 * (phi / 2.0).sin()).abs() < 1e-15);
    }

    #[test]
    fn boundary_clearance() {
        let s = schedule();
        assert_eq!(s.r[8] - s.r_bar, super::super::schedule::c_cap().times(3));
        let f = FrameMap::new(Vec2::default(), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0));
        let r = return_report(&f, &f, Vec2::default(), &s, RETURN_THRESHOLD_FACTOR);
        assert!(r.left_clearance <= -10.0);
        assert!((r.left_clearance + 1e6).abs() < 1e-3);
        assert!(r.right_clearance >= 10.0);
    }
}
