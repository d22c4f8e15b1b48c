//! Small fixed-size linear algebra for planar cocycles.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    /// Counter-clockwise rotation by a quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Unsigned angle between two nonzero vectors, in `[0, π]`.
pub fn angle_between(a: Vec2, b: Vec2) -> f64 {
    a.cross(b).abs().atan2(a.dot(b))
}

/// Angle between the lines spanned by `a` and `b`, in `[0, π/2]`.
pub fn line_angle(a: Vec2, b: Vec2) -> f64 {
    a.cross(b).abs().atan2(a.dot(b).abs())
}

/// `cot` of the angle between two vectors (signed by the dot product).
pub fn cot_angle(a: Vec2, b: Vec2) -> f64 {
    a.dot(b) / a.cross(b).abs()
}

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Svd2 {
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// Right singular vectors (inputs).
    pub v_max: Vec2,
    pub v_min: Vec2,
    /// Left singular vectors (outputs).
    pub u_max: Vec2,
    pub u_min: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Spectrum {
    Real { large: f64, small: f64 },
    Complex { re: f64, im: f64 },
}

impl Spectrum {
    /// Moduli ordered (largest, smallest).
    pub fn moduli(&self) -> (f64, f64) {
        match *self {
            Spectrum::Real { large, small } => (large.abs(), small.abs()),
            Spectrum::Complex { re, im } => {
                let m = re.hypot(im);
                (m, m)
            }
        }
    }

    pub fn is_hyperbolic(&self) -> bool {
        let (hi, lo) = self.moduli();
        hi > 1.0 && lo < 1.0
    }

    pub fn product(&self) -> f64 {
        match *self {
            Spectrum::Real { large, small } => large * small,
            Spectrum::Complex { re, im } => re * re + im * im,
        }
    }
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn diag(p: f64, q: f64) -> Self {
        Mat2::new(p, 0.0, 0.0, q)
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    /// Matrix with the given columns.
    pub fn from_columns(c0: Vec2, c1: Vec2) -> Self {
        Mat2::new(c0.x, c1.x, c0.y, c1.y)
    }

    pub fn col0(&self) -> Vec2 {
        Vec2::new(self.a, self.c)
    }

    pub fn col1(&self) -> Vec2 {
        Vec2::new(self.b, self.d)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn inverse(&self) -> Mat2 {
        let det = self.det();
        Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn frobenius(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Operator 2-norm.
    pub fn norm(&self) -> f64 {
        self.svd().sigma_max
    }

    /// Closed-form 2×2 singular value decomposition `M = U Σ Vᵀ`.
    ///
    /// Singular directions come from half-angle formulas on well-conditioned
    /// combinations of the entries, so the dominant directions stay accurate
    /// even when the matrix is numerically rank one.
    pub fn svd(&self) -> Svd2 {
        let e = 0.5 * (self.a + self.d);
        let f = 0.5 * (self.a - self.d);
        let g = 0.5 * (self.c + self.b);
        let h = 0.5 * (self.c - self.b);
        let q = e.hypot(h);
        let r = f.hypot(g);
        let sx = q + r;
        let sy = q - r;
        let a1 = g.atan2(f);
        let a2 = h.atan2(e);
        let theta = 0.5 * (a2 - a1);
        let phi = 0.5 * (a2 + a1);
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        // M = R(phi) diag(sx, sy) R(theta); rows of R(theta) are right singular vectors.
        let v_max = Vec2::new(ct, -st);
        let v_min = Vec2::new(st, ct);
        let u_max = Vec2::new(cp, sp);
        let u_min = Vec2::new(-sp, cp).scale(if sy < 0.0 { -1.0 } else { 1.0 });
        let sigma_max = sx;
        let det = self.det().abs();
        let sigma_min = if sigma_max > 0.0 { det / sigma_max } else { 0.0 };
        Svd2 { sigma_max, sigma_min, v_max, v_min, u_max, u_min }
    }

    /// Eigenvalues, using the cancellation-free quadratic root.
    pub fn spectrum(&self) -> Spectrum {
        let t = self.trace();
        let det = self.det();
        let disc = t * t - 4.0 * det;
        if disc >= 0.0 {
            let root = disc.sqrt();
            let large = 0.5 * (t + t.signum() * root);
            let small = if large != 0.0 { det / large } else { 0.0 };
            if large.abs() >= small.abs() {
                Spectrum::Real { large, small }
            } else {
                Spectrum::Real { large: small, small: large }
            }
        } else {
            Spectrum::Complex { re: 0.5 * t, im: 0.5 * (-disc).sqrt() }
        }
    }

    /// Eigenvector for a real eigenvalue `lambda` (unit length).
    pub fn eigenvector(&self, lambda: f64) -> Vec2 {
        let r0 = Vec2::new(self.b, lambda - self.a);
        let r1 = Vec2::new(lambda - self.d, self.c);
        if r0.norm() >= r1.norm() { r0.normalized() } else { r1.normalized() }
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.apply(v)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

/// Matrix product kept as `exp(log_scale) · unit`, with the norm factored out
/// after every multiplication so long products never overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScaledProduct {
    pub unit: Mat2,
    pub log_scale: f64,
}

impl Default for LogScaledProduct {
    fn default() -> Self {
        LogScaledProduct { unit: Mat2::IDENTITY, log_scale: 0.0 }
    }
}

impl LogScaledProduct {
    /// Replace `P` by `m · P`.
    pub fn push_left(&mut self, m: &Mat2) {
        let next = *m * self.unit;
        let s = next.max_abs();
        self.unit = next.scale(1.0 / s);
        self.log_scale += s.ln();
    }

    /// Replace `P` by `P · m`.
    pub fn push_right(&mut self, m: &Mat2) {
        let next = self.unit * *m;
        let s = next.max_abs();
        self.unit = next.scale(1.0 / s);
        self.log_scale += s.ln();
    }

    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.unit.norm().ln()
    }

    pub fn to_matrix(&self) -> Mat2 {
        self.unit.scale(self.log_scale.exp())
    }
}

/// Sum with Neumaier compensation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reconstruct(s: &Svd2) -> Mat2 {
        // M = σmax u_max v_maxᵀ + σmin u_min v_minᵀ
        let outer = |u: Vec2, v: Vec2| Mat2::new(u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y);
        outer(s.u_max, s.v_max).scale(s.sigma_max) + outer(s.u_min, s.v_min).scale(s.sigma_min)
    }

    #[test]
    fn svd_reconstructs() {
        for m in [
            Mat2::new(7.0, 1.0, 6.0, 1.0),
            Mat2::new(0.3, -2.0, 1.5, 0.1),
            Mat2::diag(2.0, 0.5),
            Mat2::rotation(0.7),
            Mat2::new(-1.0, 4.0, 0.0, -1.0),
        ] {
            let s = m.svd();
            let r = reconstruct(&s);
            assert!((r - m).max_abs() < 1e-12, "{m:?} -> {r:?}");
            assert_relative_eq!(s.v_max.dot(s.v_min), 0.0, epsilon = 1e-14);
            assert!(s.sigma_max >= s.sigma_min);
        }
    }

    #[test]
    fn svd_of_diagonal_saddle() {
        let s = Mat2::diag(2.0, 0.5).svd();
        assert_relative_eq!(s.sigma_max, 2.0, epsilon = 1e-15);
        assert_relative_eq!(s.sigma_min, 0.5, epsilon = 1e-15);
        assert_relative_eq!(s.v_min.x.abs(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(s.v_min.y.abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn spectrum_of_standard_map_fixed_point() {
        let sp = Mat2::new(7.0, 1.0, 6.0, 1.0).spectrum();
        let (hi, lo) = sp.moduli();
        assert_relative_eq!(hi, 4.0 + 15f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(hi * lo, 1.0, epsilon = 1e-14);
        assert!(sp.is_hyperbolic());
        assert!(!Mat2::rotation(0.3).spectrum().is_hyperbolic());
    }

    #[test]
    fn log_scaled_product_matches_plain_product() {
        let j = Mat2::new(1.3, 0.7, 0.4, 0.98);
        let mut p = LogScaledProduct::default();
        let mut plain = Mat2::IDENTITY;
        for _ in 0..40 {
            p.push_left(&j);
            plain = j * plain;
        }
        let rel = (p.to_matrix() - plain).max_abs() / plain.max_abs();
        assert!(rel < 1e-12);
        assert_relative_eq!(p.log_norm(), plain.norm().ln(), max_relative = 1e-12);
    }
}
