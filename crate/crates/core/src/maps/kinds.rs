use crate::linalg::{Mat2, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

/// Trigonometric coefficients of the kick `y ↦ y + Σ_k s_k sin 2πkx + c_k cos 2πkx`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTable {
    #[serde(default)]
    pub sin: Vec<f64>,
    #[serde(default)]
    pub cos: Vec<f64>,
}

impl TrigTable {
    fn kick(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for (i, a) in self.sin.iter().enumerate() {
            s += a * (TAU * (i + 1) as f64 * x).sin();
        }
        for (i, b) in self.cos.iter().enumerate() {
            s += b * (TAU * (i + 1) as f64 * x).cos();
        }
        s
    }

    fn kick_prime(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for (i, a) in self.sin.iter().enumerate() {
            let w = TAU * (i + 1) as f64;
            s += a * w * (w * x).cos();
        }
        for (i, b) in self.cos.iter().enumerate() {
            let w = TAU * (i + 1) as f64;
            s -= b * w * (w * x).sin();
        }
        s
    }

    pub(crate) fn kick_second(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for (i, a) in self.sin.iter().enumerate() {
            let w = TAU * (i + 1) as f64;
            s -= a * w * w * (w * x).sin();
        }
        for (i, b) in self.cos.iter().enumerate() {
            let w = TAU * (i + 1) as f64;
            s -= b * w * w * (w * x).cos();
        }
        s
    }

    /// `kick(x + d) − kick(x)` without cancellation.
    fn kick_offset(&self, x: f64, d: f64) -> f64 {
        let mut s = 0.0;
        for (i, a) in self.sin.iter().enumerate() {
            let w = TAU * (i + 1) as f64;
            s += a * 2.0 * (w * x + 0.5 * w * d).cos() * (0.5 * w * d).sin();
        }
        for (i, b) in self.cos.iter().enumerate() {
            let w = TAU * (i + 1) as f64;
            s -= b * 2.0 * (w * x + 0.5 * w * d).sin() * (0.5 * w * d).sin();
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum MapKind {
    RigidRotation { eps: f64 },
    PolarTwist { rho0: f64, rho1: f64 },
    StandardMap { k: f64 },
    LinearSaddle { mu: f64 },
    PerturbedTwist { eps: f64, amp: f64 },
    TrigTwist { table: TrigTable },
}

/// `R(θ)p − p` and friends need `R(θ) − I` without cancellation.
fn rot_minus_id(theta: f64) -> Mat2 {
    let s = (0.5 * theta).sin();
    let c = -2.0 * s * s;
    let sn = theta.sin();
    Mat2::new(c, -sn, sn, c)
}

fn shear(amp: f64, p: Vec2) -> Vec2 {
    Vec2::new(p.x, p.y + amp * p.x * p.x)
}

fn shear_jac(amp: f64, p: Vec2) -> Mat2 {
    Mat2::new(1.0, 0.0, 2.0 * amp * p.x, 1.0)
}

/// `shear(p + d) − shear(p)`.
fn shear_offset(amp: f64, p: Vec2, d: Vec2) -> Vec2 {
    Vec2::new(d.x, d.y + amp * d.x * (2.0 * p.x + d.x))
}

impl MapKind {
    pub fn eval(&self, p: Vec2) -> Vec2 {
        match self {
            MapKind::RigidRotation { eps } => Mat2::rotation(TAU * eps).apply(p),
            MapKind::PolarTwist { rho0, rho1 } => {
                let s = p.dot(p);
                Mat2::rotation(TAU * (rho0 + rho1 * s)).apply(p)
            }
            MapKind::StandardMap { k } => {
                let y = p.y + k / TAU * (TAU * p.x).sin();
                Vec2::new(p.x + y, y)
            }
            MapKind::LinearSaddle { mu } => Vec2::new(mu * p.x, p.y / mu),
            MapKind::PerturbedTwist { eps, amp } => {
                let q = shear(-amp, p);
                shear(*amp, Mat2::rotation(TAU * eps).apply(q))
            }
            MapKind::TrigTwist { table } => {
                let y = p.y + table.kick(p.x);
                Vec2::new(p.x + y, y)
            }
        }
    }

    pub fn jacobian(&self, p: Vec2) -> Mat2 {
        match self {
            MapKind::RigidRotation { eps } => Mat2::rotation(TAU * eps),
            MapKind::PolarTwist { rho0, rho1 } => {
                let s = p.dot(p);
                let r = Mat2::rotation(TAU * (rho0 + rho1 * s));
                let c = 2.0 * TAU * rho1;
                let jp = p.perp();
                // R(φ)(I + c (Jp) pᵀ)
                let shear = Mat2::new(1.0 + c * jp.x * p.x, c * jp.x * p.y, c * jp.y * p.x, 1.0 + c * jp.y * p.y);
                r * shear
            }
            MapKind::StandardMap { k } => {
                let c = k * (TAU * p.x).cos();
                Mat2::new(1.0 + c, 1.0, c, 1.0)
            }
            MapKind::LinearSaddle { mu } => Mat2::diag(*mu, 1.0 / mu),
            MapKind::PerturbedTwist { eps, amp } => {
                let q = shear(-amp, p);
                let rot = Mat2::rotation(TAU * eps);
                shear_jac(*amp, rot.apply(q)) * rot * shear_jac(-amp, p)
            }
            MapKind::TrigTwist { table } => {
                let c = table.kick_prime(p.x);
                Mat2::new(1.0 + c, 1.0, c, 1.0)
            }
        }
    }

    /// `f(p + d) − f(p)` in the lifted chart, accurate for tiny `d`.
    pub fn eval_offset(&self, p: Vec2, d: Vec2) -> Vec2 {
        match self {
            MapKind::RigidRotation { eps } => Mat2::rotation(TAU * eps).apply(d),
            MapKind::PolarTwist { rho0, rho1 } => {
                let s = p.dot(p);
                let r = Mat2::rotation(TAU * (rho0 + rho1 * s));
                let dphi = TAU * rho1 * (2.0 * p.dot(d) + d.dot(d));
                let rd = Mat2::rotation(dphi);
                r.apply(rot_minus_id(dphi).apply(p) + rd.apply(d))
            }
            MapKind::StandardMap { k } => {
                let dy = d.y + k / PI * (TAU * p.x + PI * d.x).cos() * (PI * d.x).sin();
                Vec2::new(d.x + dy, dy)
            }
            MapKind::LinearSaddle { mu } => Vec2::new(mu * d.x, d.y / mu),
            MapKind::PerturbedTwist { eps, amp } => {
                let rot = Mat2::rotation(TAU * eps);
                let q = shear(-amp, p);
                let dq = shear_offset(-amp, p, d);
                let b = rot.apply(q);
                shear_offset(*amp, b, rot.apply(dq))
            }
            MapKind::TrigTwist { table } => {
                let dy = d.y + table.kick_offset(p.x, d.x);
                Vec2::new(d.x + dy, dy)
            }
        }
    }

    /// Exact lifted angular increment in turns, when the map has a closed form.
    pub fn exact_lift_increment(&self, p: Vec2) -> Option<f64> {
        match self {
            MapKind::RigidRotation { eps } => Some(*eps),
            MapKind::PolarTwist { rho0, rho1 } => Some(rho0 + rho1 * p.dot(p)),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MapKind::RigidRotation { .. } => "rigid-rotation",
            MapKind::PolarTwist { .. } => "polar-twist",
            MapKind::StandardMap { .. } => "standard-map",
            MapKind::LinearSaddle { .. } => "linear-saddle",
            MapKind::PerturbedTwist { .. } => "perturbed-twist",
            MapKind::TrigTwist { .. } => "trig-twist",
        }
    }
}

/// Largest singular value of the shear `[[1, s], [0, 1]]`.
pub(crate) fn shear_norm(s: f64) -> f64 {
    let s = s.abs();
    0.5 * (s + (s * s + 4.0).sqrt())
}
