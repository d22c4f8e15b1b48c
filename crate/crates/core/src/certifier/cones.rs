use super::frame::FrameChain;
use super::schedule::BoxSchedule;
use crate::error::{Error, Result};
use crate::linalg::{Mat2, Vec2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeMode {
    Analytic,
    Sampled,
}

/// Log margins `ln(rhs) − ln(lhs)` of the three sufficient inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMargins {
    #[serde(with = "crate::format::ext_f64")]
    pub kappa: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub tau: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub kappa_tilde: f64,
}

impl AnalyticMargins {
    pub fn passed(&self) -> bool {
        self.kappa > 0.0 && self.tau > 0.0 && self.kappa_tilde >= 0.0
    }

    fn first_failure(&self) -> Option<(&'static str, f64)> {
        if !(self.kappa > 0.0) {
            Some(("kappa_{n+1} inequality", self.kappa))
        } else if !(self.tau > 0.0) {
            Some(("tau_{n+1} inequality", self.tau))
        } else if !(self.kappa_tilde >= 0.0) {
            Some(("backward kappa_tilde inequality", self.kappa_tilde))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledMargins {
    pub points: usize,
    /// Worst `ln(κ_{n+1}|ā|/|b̄|)` over images of `∂C_n`.
    #[serde(with = "crate::format::ext_f64")]
    pub forward: f64,
    /// Worst `ln(κ̃_n|b|/|a|)` over preimages of `∂C̃_{n+1}`.
    #[serde(with = "crate::format::ext_f64")]
    pub backward: f64,
    pub backward_points: usize,
    /// Worst `(|v̄| − r_{n+1})/r_{n+1}` over images of the vertical boundary.
    pub crossing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub n: usize,
    pub analytic: AnalyticMargins,
    pub sampled: Option<SampledMargins>,
}

/// `ln(eᵃ + eᵇ)`.
pub(crate) fn lse(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// `ln(1 − eˣ)`, `NaN` for `x ≥ 0`.
fn ln1mexp(x: f64) -> f64 {
    if x >= 0.0 {
        f64::NAN
    } else if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

pub fn analytic_margins(s: &BoxSchedule, lambda_s: f64, lambda_u: f64, n: usize) -> AnalyticMargins {
    let le = s.ln_eps[n];
    let (k0, k1) = (s.kappa[n].ln(), s.kappa[n + 1].ln());
    let (kt0, kt1) = (s.kappa_tilde[n].ln(), s.kappa_tilde[n + 1].ln());
    let e1 = le + k0.exp().ln_1p();
    let ln_ratio = lse(lambda_s + k0, e1) - (lambda_u + ln1mexp(e1 - lambda_u));
    let kappa = k1 - ln_ratio;
    let factor = lse(lse(lambda_s, le), le + ln_ratio);
    let tau = s.tau[n + 1].ln() - (s.tau[n].ln() + factor);
    let num = kt0 + lambda_u + ln1mexp(lse(le - lambda_u, le - kt0 - lambda_u));
    let den = lse(lse(lambda_s, le), le + kt0);
    let kappa_tilde = num - den - kt1;
    let nan_fail = |x: f64| if x.is_nan() { f64::NEG_INFINITY } else { x };
    AnalyticMargins { kappa: nan_fail(kappa), tau: nan_fail(tau), kappa_tilde: nan_fail(kappa_tilde) }
}

/// `ln(κ|ā|/|b̄|)` for the images of `(1, ±κ_in)`; `-inf` if they fall in
/// opposite half-cones.
pub(crate) fn cone_image_margin(j: &Mat2, k_in: f64, k_out: f64) -> f64 {
    let p = j.apply(Vec2::new(1.0, k_in));
    let m = j.apply(Vec2::new(1.0, -k_in));
    if p.x * m.x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let one = |w: Vec2| (k_out * w.x.abs()).ln() - w.y.abs().ln();
    one(p).min(one(m))
}

/// Same for the vertical cone `|a| < κ|b|`, with `(±κ_in, 1)`.
pub(crate) fn vertical_cone_image_margin(j: &Mat2, k_in: f64, k_out: f64) -> f64 {
    let swap = Mat2 { a: j.d, b: j.c, c: j.b, d: j.a };
    cone_image_margin(&swap, k_in, k_out)
}

pub(crate) fn grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..n).map(move |i| if n == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (n - 1) as f64 })
}

fn sampled_margins(chain: &FrameChain, s: &BoxSchedule, n: usize, g: usize) -> SampledMargins {
    let u0 = s.box_at(n);
    let u1 = s.box_at(n + 1);
    let (kt0, kt1) = (s.kappa_tilde[n].exp(), s.kappa_tilde[n + 1].exp());
    let mut out = SampledMargins {
        points: 0,
        forward: f64::INFINITY,
        backward: f64::INFINITY,
        backward_points: 0,
        crossing: f64::INFINITY,
    };
    for sv in grid(g) {
        let v = sv * u0.r;
        for sw in grid(g) {
            let p = Vec2::new(v, sw * u0.half_height(v));
            let j = chain.step_jacobian(n, p);
            out.points += 1;
            out.forward = out.forward.min(cone_image_margin(&j, u0.kappa, u1.kappa));
            let y = chain.step(n, p);
            if u1.contains(y.x, y.y) {
                out.backward_points += 1;
                out.backward = out.backward.min(vertical_cone_image_margin(&j.inverse(), kt1, kt0));
            }
            if sv.abs() == 1.0 {
                out.crossing = out.crossing.min((sv * y.x - u1.r) / u1.r);
            }
        }
    }
    out
}

/// Cone preservation at step `n`.
///
/// The sampled leg runs only when boxes are representable; the crossing margin
/// is reported but does not gate.
pub fn cone_step_check(chain: &FrameChain, s: &BoxSchedule, n: usize, mode: ConeMode, grid_n: usize) -> Result<StepReport> {
    if n >= s.len() || n >= chain.len() {
        return Err(Error::InvalidParameter(format!("step {n} beyond return time {}", s.len())));
    }
    let t = chain.trace;
    let analytic = analytic_margins(s, t.lambda_s[n], t.lambda_u[n], n);
    if let Some((which, margin)) = analytic.first_failure() {
        return Err(Error::ConeCheckFailed { step: n, which: which.into(), margin });
    }
    let sampled = match mode {
        ConeMode::Sampled if s.geometric() => Some(sampled_margins(chain, s, n, grid_n.max(2))),
        _ => None,
    };
    if let Some(sm) = &sampled {
        if !(sm.forward > 0.0) {
            return Err(Error::ConeCheckFailed { step: n, which: "sampled forward cone".into(), margin: sm.forward });
        }
        if !(sm.backward > 0.0) {
            return Err(Error::ConeCheckFailed { step: n, which: "sampled backward cone".into(), margin: sm.backward });
        }
    }
    Ok(StepReport { n, analytic, sampled })
}

#[cfg(test)]
mod tests {
    use super::super::schedule::{build_schedule, ScheduleParams};
    use super::*;
    use crate::cocycle::stable_trace;
    use crate::maps::PlanarMap;

    #[test]
    fn log_helpers() {
        assert!((lse(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(lse(f64::NEG_INFINITY, 1.5), 1.5);
        assert!((ln1mexp(-0.1) - (1.0 - (-0.1f64).exp()).ln()).abs() < 1e-14);
        assert_eq!(ln1mexp(f64::NEG_INFINITY), 0.0);
        assert!(ln1mexp(0.0).is_nan());
    }

    #[test]
    fn saddle_margins_are_the_linear_gap() {
        let f = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
        let t = stable_trace(&f, Vec2::default(), 40).unwrap().1.segment(0, 8);
        let a = 2f64.ln();
        let s = build_schedule(&t, &ScheduleParams { a, d: 2.0, d_nonlin: 0.0, m: 7, c0: 1.0 }).unwrap();
        let chain = FrameChain::new(&f, &t).unwrap();
        for n in 0..8 {
            let r = cone_step_check(&chain, &s, n, ConeMode::Sampled, 5).unwrap();
            let dc = (s.c[n + 1] - s.c[n]).ln();
            assert!((r.analytic.kappa - (2.0 * a - dc)).abs() < 1e-9);
            assert!((r.analytic.tau - a / 100.0).abs() < 1e-9);
            let sm = r.sampled.unwrap();
            assert!(sm.forward > 0.0 && sm.backward > 0.0);
        }
    }

    #[test]
    fn rotation_has_no_cone_gap() {
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", 0.1)]).unwrap();
        let (_, t) = stable_trace(&f, Vec2::new(0.5, 0.1), 6).unwrap();
        let s = build_schedule(&t, &ScheduleParams { a: 0.5, d: 2.0, d_nonlin: 0.0, m: 7, c0: 1.0 }).unwrap();
        let failed: Vec<_> = s.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"c_L = 100") && failed.contains(&"tau_L <= r_bar/10"), "{failed:?}");
        let chain = FrameChain::new(&f, &t).unwrap();
        let r = cone_step_check(&chain, &s, 0, ConeMode::Analytic, 3).unwrap();
        assert!((r.analytic.kappa - 0.005).abs() < 1e-8);
    }

    #[test]
    fn cone_margin_of_diagonal() {
        let j = Mat2::diag(4.0, 0.25);
        let m = cone_image_margin(&j, 0.1, 0.1);
        assert!((m - 16f64.ln()).abs() < 1e-12);
        let swap = Mat2::diag(0.5, 2.0);
        assert!(cone_image_margin(&swap, 0.1, 0.1) < 0.0);
        assert!((vertical_cone_image_margin(&Mat2::diag(0.25, 4.0), 0.1, 0.1) - 16f64.ln()).abs() < 1e-12);
    }
}
