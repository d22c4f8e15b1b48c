use crate::error::{Error, Result};
use crate::linalg::{cot_angle, LogScaledProduct, Vec2};
use crate::maps::{iterate, Orbit, PlanarMap};
use serde::{Deserialize, Serialize};

/// Base point with candidate stable and unstable unit vectors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentTriple {
    pub base: Vec2,
    pub v_s: Vec2,
    pub v_u: Vec2,
    /// Set when `v_s` is the most contracting direction of `Dg^h(base)`; the
    /// stable frames are then recomputed backward from `x_h`.
    pub stable_horizon: Option<usize>,
    /// Singular values of `Dg^h` were equal to working precision.
    pub degenerate: bool,
}

impl TangentTriple {
    pub fn new(base: Vec2, v_s: Vec2, v_u: Vec2) -> Result<Self> {
        let t = TangentTriple { base, v_s, v_u, stable_horizon: None, degenerate: false };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("v_s", self.v_s), ("v_u", self.v_u)] {
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("{name} is not a unit vector (norm {})", v.norm())));
            }
        }
        if crate::linalg::line_angle(self.v_s, self.v_u) <= 1e-15 {
            return Err(Error::InvalidParameter("v_s and v_u are parallel".into()));
        }
        Ok(())
    }
}

/// Exponent sequences and frames along `x_0, …, x_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleTrace {
    pub points: Vec<Vec2>,
    pub v_s: Vec<Vec2>,
    pub v_u: Vec<Vec2>,
    pub lambda_s: Vec<f64>,
    pub lambda_u: Vec<f64>,
    pub lambda_bar_e: Vec<f64>,
    pub lambda_e: Vec<f64>,
    /// `cot∠(v^s_i, v^u_i)`, signed by the dot product.
    pub cot: Vec<f64>,
}

pub(crate) fn bar_e(ls: f64, lu: f64) -> f64 {
    lu.min(-ls)
}

pub(crate) fn lambda_e(ls: f64, lu: f64) -> f64 {
    lu.min(lu - ls).min(-2.0 * ls)
}

impl CocycleTrace {
    pub fn len(&self) -> usize {
        self.lambda_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_s.is_empty()
    }

    fn from_frames(points: Vec<Vec2>, v_s: Vec<Vec2>, v_u: Vec<Vec2>, lambda_s: Vec<f64>, lambda_u: Vec<f64>) -> Self {
        let lambda_bar_e = lambda_s.iter().zip(&lambda_u).map(|(s, u)| bar_e(*s, *u)).collect();
        let lambda_e = lambda_s.iter().zip(&lambda_u).map(|(s, u)| lambda_e(*s, *u)).collect();
        let cot = v_s.iter().zip(&v_u).map(|(s, u)| cot_angle(*s, *u)).collect();
        CocycleTrace { points, v_s, v_u, lambda_s, lambda_u, lambda_bar_e, lambda_e, cot }
    }

    /// Sub-trace on `x_n, …, x_m`.
    pub fn segment(&self, n: usize, m: usize) -> CocycleTrace {
        assert!(n <= m && m <= self.len());
        CocycleTrace {
            points: self.points[n..=m].to_vec(),
            v_s: self.v_s[n..=m].to_vec(),
            v_u: self.v_u[n..=m].to_vec(),
            lambda_s: self.lambda_s[n..m].to_vec(),
            lambda_u: self.lambda_u[n..m].to_vec(),
            lambda_bar_e: self.lambda_bar_e[n..m].to_vec(),
            lambda_e: self.lambda_e[n..m].to_vec(),
            cot: self.cot[n..=m].to_vec(),
        }
    }

    /// Recompute `λ^{s,u}_i` from the stored frames and the map; returns the
    /// largest absolute discrepancy.
    pub fn recompute_discrepancy(&self, map: &PlanarMap) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            let j = map.jacobian(self.points[i]);
            let ls = j.apply(self.v_s[i]).norm().ln();
            let lu = j.apply(self.v_u[i]).norm().ln();
            worst = worst.max((ls - self.lambda_s[i]).abs()).max((lu - self.lambda_u[i]).abs());
        }
        worst
    }
}

/// Threshold below which `log σ_max(Dg^q)` counts as an isometric stretch.
const DEGENERATE_LOG_GAP: f64 = 1e-14;

/// Most contracting direction of `Dg^q(x)` with `v_u = v_s^⊥`.
pub fn most_contracting(map: &PlanarMap, x: Vec2, q: usize) -> Result<TangentTriple> {
    Ok(stable_trace(map, x, q)?.0)
}

/// Trace of a triple for `L` steps.
///
/// For triples produced by [`most_contracting`] with horizon `h ≥ L` the stable
/// frames are obtained by iterating `Dg⁻¹` backward from the minimal left
/// singular vector at `x_h`, which is stable; unstable frames are pushed forward.
pub fn trace(map: &PlanarMap, triple: &TangentTriple, l: usize) -> Result<CocycleTrace> {
    triple.validate()?;
    match triple.stable_horizon {
        Some(h) if h >= l => {
            let orbit = iterate(map, triple.base, h)?;
            let (_, full) = frames_from_orbit(&orbit, Some(triple.v_s), triple.v_u);
            Ok(full.segment(0, l))
        }
        _ => {
            let orbit = iterate(map, triple.base, l)?;
            let mut v_s = vec![triple.v_s];
            let mut v_u = vec![triple.v_u];
            let mut ls = Vec::with_capacity(l);
            let mut lu = Vec::with_capacity(l);
            for j in &orbit.jacobians {
                let ws = j.apply(*v_s.last().unwrap());
                let wu = j.apply(*v_u.last().unwrap());
                ls.push(ws.norm().ln());
                lu.push(wu.norm().ln());
                v_s.push(ws.normalized());
                v_u.push(wu.normalized());
            }
            Ok(CocycleTrace::from_frames(orbit.points, v_s, v_u, ls, lu))
        }
    }
}

/// Most contracting triple at `x` for horizon `q` together with its full trace.
pub fn stable_trace(map: &PlanarMap, x: Vec2, q: usize) -> Result<(TangentTriple, CocycleTrace)> {
    if q == 0 {
        return Err(Error::InvalidParameter("q must be positive".into()));
    }
    let orbit = iterate(map, x, q)?;
    let (triple, trace) = frames_from_orbit(&orbit, None, Vec2::default());
    Ok((triple, trace))
}

/// Backward stable frames from `x_q`; `v_u` defaults to `v_s^⊥`.
fn frames_from_orbit(orbit: &Orbit, want_s: Option<Vec2>, want_u: Vec2) -> (TangentTriple, CocycleTrace) {
    let q = orbit.len();
    let mut prod = LogScaledProduct::default();
    for j in &orbit.jacobians {
        prod.push_left(j);
    }
    let svd = prod.unit.svd();
    let log_gap = prod.log_norm();
    let degenerate = log_gap < DEGENERATE_LOG_GAP;
    let mut v_s = vec![Vec2::default(); q + 1];
    let mut ls = vec![0.0; q];
    v_s[q] = svd.u_min;
    for i in (0..q).rev() {
        let w = orbit.jacobians[i].inverse().apply(v_s[i + 1]);
        let n = w.norm();
        ls[i] = -n.ln();
        v_s[i] = w.scale(1.0 / n);
    }
    let flip = match want_s {
        Some(s) => s.dot(v_s[0]) < 0.0,
        None => false,
    };
    if flip {
        for v in v_s.iter_mut() {
            *v = -*v;
        }
    }
    let u0 = if want_s.is_some() { want_u } else { v_s[0].perp() };
    let mut v_u = Vec::with_capacity(q + 1);
    let mut lu = Vec::with_capacity(q);
    v_u.push(u0);
    for j in &orbit.jacobians {
        let w = j.apply(*v_u.last().unwrap());
        let n = w.norm();
        lu.push(n.ln());
        v_u.push(w.scale(1.0 / n));
    }
    let triple =
        TangentTriple { base: orbit.points[0], v_s: v_s[0], v_u: u0, stable_horizon: Some(q), degenerate };
    (triple, CocycleTrace::from_frames(orbit.points.clone(), v_s, v_u, ls, lu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saddle_eigenframe_trace() {
        let f = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
        let t = TangentTriple::new(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0)).unwrap();
        let tr = trace(&f, &t, 10).unwrap();
        let ln2 = 2f64.ln();
        assert!(tr.lambda_s.iter().all(|l| (*l + ln2).abs() < 1e-15));
        assert!(tr.lambda_u.iter().all(|l| (*l - ln2).abs() < 1e-15));
        assert!(tr.lambda_bar_e.iter().chain(&tr.lambda_e).all(|l| (*l - ln2).abs() < 1e-15));
        assert!(tr.cot.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn saddle_most_contracting_is_vertical() {
        let f = PlanarMap::from_name("linear-saddle", &[("mu", 2.0)]).unwrap();
        let t = most_contracting(&f, Vec2::new(0.0, 0.3), 5).unwrap();
        assert!(t.v_s.x.abs() < 1e-15 && (t.v_s.y.abs() - 1.0).abs() < 1e-15);
        assert!(!t.degenerate);
    }

    #[test]
    fn rotation_is_degenerate() {
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", 0.1)]).unwrap();
        let t = most_contracting(&f, Vec2::new(0.5, 0.0), 20).unwrap();
        assert!(t.degenerate);
        let tr = trace(&f, &t, 20).unwrap();
        assert!(tr.lambda_s.iter().chain(&tr.lambda_u).all(|l| l.abs() < 1e-14));
    }

    #[test]
    fn stable_sum_matches_log_norm() {
        let f = PlanarMap::from_name("standard-map", &[("k", 6.0)]).unwrap();
        let x = Vec2::new(0.123, 0.456);
        let (t, tr) = stable_trace(&f, x, 200).unwrap();
        let o = iterate(&f, x, 200).unwrap();
        let log_norm = o.product().log_norm();
        let sum: f64 = tr.lambda_s.iter().sum();
        assert!((sum + log_norm).abs() < 1e-6 * log_norm);
        // trace() reproduces the same frames from the triple
        let again = trace(&f, &t, 200).unwrap();
        assert_eq!(again, tr);
        assert!(tr.recompute_discrepancy(&f) < 1e-9);
    }
}
