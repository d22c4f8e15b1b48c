use crate::linalg::Vec2;
use serde::{Deserialize, Serialize};

/// Region on which a map is defined, in a single global chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Domain {
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    PlaneChart { xmin: f64, xmax: f64, ymin: f64, ymax: f64 },
    /// Unit periodic square `[0,1)²`; points are reduced mod 1.
    Torus,
    /// Image of the disk of `radius` under the shear `(x, y) ↦ (x, y + amp·x²)`.
    ShearedDisk { radius: f64, amp: f64 },
}

impl Domain {
    pub fn contains(&self, p: Vec2) -> bool {
        if !p.is_finite() {
            return false;
        }
        match *self {
            Domain::Disk { radius } => p.norm() <= radius,
            Domain::Annulus { inner, outer } => {
                let r = p.norm();
                r >= inner && r <= outer
            }
            Domain::PlaneChart { xmin, xmax, ymin, ymax } => p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax,
            Domain::Torus => true,
            Domain::ShearedDisk { radius, amp } => Vec2::new(p.x, p.y - amp * p.x * p.x).norm() <= radius,
        }
    }

    /// Canonical representative (mod 1 on the torus, identity elsewhere).
    pub fn reduce(&self, p: Vec2) -> Vec2 {
        match self {
            Domain::Torus => Vec2::new(p.x.rem_euclid(1.0), p.y.rem_euclid(1.0)),
            _ => p,
        }
    }

    /// Chart difference `a − b` (minimal image on the torus).
    pub fn difference(&self, a: Vec2, b: Vec2) -> Vec2 {
        let d = a - b;
        match self {
            Domain::Torus => Vec2::new(d.x - d.x.round(), d.y - d.y.round()),
            _ => d,
        }
    }

    pub fn distance(&self, a: Vec2, b: Vec2) -> f64 {
        self.difference(a, b).norm()
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, Domain::Torus)
    }

    /// Axis-aligned bounding box `(xmin, xmax, ymin, ymax)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match *self {
            Domain::Disk { radius } | Domain::Annulus { outer: radius, .. } => (-radius, radius, -radius, radius),
            Domain::PlaneChart { xmin, xmax, ymin, ymax } => (xmin, xmax, ymin, ymax),
            Domain::Torus => (0.0, 1.0, 0.0, 1.0),
            Domain::ShearedDisk { radius, amp } => {
                let top = radius + amp.max(0.0) * radius * radius;
                let bottom = -radius + amp.min(0.0) * radius * radius;
                (-radius, radius, bottom, top)
            }
        }
    }

    /// Lebesgue area.
    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Domain::Disk { radius } | Domain::ShearedDisk { radius, .. } => PI * radius * radius,
            Domain::Annulus { inner, outer } => PI * (outer * outer - inner * inner),
            Domain::PlaneChart { xmin, xmax, ymin, ymax } => (xmax - xmin) * (ymax - ymin),
            Domain::Torus => 1.0,
        }
    }

    /// Whether angular coordinates about the origin make sense.
    pub fn is_rotational(&self) -> bool {
        matches!(self, Domain::Disk { .. } | Domain::Annulus { .. } | Domain::ShearedDisk { .. })
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: String| Err(crate::Error::InvalidParameter(m));
        match *self {
            Domain::Disk { radius } if !(radius > 0.0 && radius.is_finite()) => bad(format!("disk radius {radius}")),
            Domain::Annulus { inner, outer } if !(0.0 <= inner && inner < outer && outer.is_finite()) => {
                bad(format!("annulus radii must satisfy 0 <= inner < outer, got {inner}, {outer}"))
            }
            Domain::PlaneChart { xmin, xmax, ymin, ymax } if !(xmin < xmax && ymin < ymax) => {
                bad("plane chart box is empty".into())
            }
            Domain::ShearedDisk { radius, amp } if !(radius > 0.0 && amp.is_finite()) => {
                bad(format!("sheared disk radius {radius}, amp {amp}"))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_minimal_image() {
        let d = Domain::Torus.difference(Vec2::new(0.99, 0.01), Vec2::new(0.01, 0.98));
        assert!((d.x + 0.02).abs() < 1e-15 && (d.y - 0.03).abs() < 1e-15);
        assert_eq!(Domain::Torus.reduce(Vec2::new(-0.25, 1.5)), Vec2::new(0.75, 0.5));
    }

    #[test]
    fn membership() {
        assert!(Domain::Disk { radius: 1.0 }.contains(Vec2::new(0.6, 0.8)));
        assert!(!Domain::Annulus { inner: 0.5, outer: 1.0 }.contains(Vec2::new(0.1, 0.1)));
        let s = Domain::ShearedDisk { radius: 1.0, amp: 0.5 };
        assert!(s.contains(Vec2::new(0.8, 0.6 + 0.5 * 0.64)));
        assert!(!s.contains(Vec2::new(0.8, -0.6)));
        assert!(Domain::Annulus { inner: 1.0, outer: 0.5 }.validate().is_err());
    }
}
