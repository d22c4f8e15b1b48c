//! Deterministic low-discrepancy seed points.

use crate::linalg::Vec2;
use crate::maps::Domain;

/// Radical inverse of `i` in `base`.
pub fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// First `count` points of the (2, 3) Halton sequence inside `domain`,
/// skipping index 0.
pub fn halton(domain: &Domain, count: usize) -> Vec<Vec2> {
    let (x0, x1, y0, y1) = domain.bounding_box();
    let mut out = Vec::with_capacity(count);
    let mut i = 1u64;
    let cap = 1000 * count as u64 + 1000;
    while out.len() < count && i < cap {
        let p = Vec2::new(x0 + (x1 - x0) * radical_inverse(i, 2), y0 + (y1 - y0) * radical_inverse(i, 3));
        if domain.contains(p) {
            out.push(p);
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(5, 3), 2.0 / 3.0 + 1.0 / 9.0);
    }

    #[test]
    fn halton_points_lie_in_domain() {
        let d = Domain::Disk { radius: 1.0 };
        let pts = halton(&d, 50);
        assert_eq!(pts.len(), 50);
        assert!(pts.iter().all(|p| d.contains(*p)));
    }
}
