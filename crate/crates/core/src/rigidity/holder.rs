use crate::arithmetic::ContinuedFraction;
use crate::certifier::lse;
use crate::error::{Error, Result};
use crate::maps::{GridSpec, PlanarMap};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default cap on `q_j · grid points` iterations per row.
pub const DEFAULT_ITERATION_BUDGET: u64 = 200_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub j: usize,
    pub ln_q: f64,
    pub ln_q_next: f64,
    /// `q_j`, when it fits in 64 bits.
    pub q: Option<u64>,
    /// `sup_x |f^{q_j}(x) − x|` over the grid; `None` when skipped.
    pub measured: Option<f64>,
    /// `ln(1/√q_{j+1} + C^{q_j}(2/√q_{j+1})^{a^{q_j}})`.
    #[serde(with = "crate::format::ext_f64")]
    pub ln_bound: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub bound: f64,
    pub holds: Option<bool>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub holder_exponent: f64,
    pub holder_constant: f64,
    pub grid: GridSpec,
    pub points: usize,
    pub iteration_budget: u64,
    pub rows: Vec<HolderRow>,
}

/// Log of the bound from `q_j` (possibly `inf`) and `ln q_{j+1}`.
pub fn holder_ln_bound(q: f64, ln_q_next: f64, a: f64, c: f64) -> f64 {
    let first = -0.5 * ln_q_next;
    let power = if a == 1.0 { 1.0 } else { (q * a.ln()).exp() };
    let growth = if c == 1.0 { 0.0 } else { q * c.ln() };
    let second = growth + power * (std::f64::consts::LN_2 - 0.5 * ln_q_next);
    lse(first, second)
}

/// Direct evaluation, `None` unless every intermediate is a normal float.
pub fn holder_bound_direct(q: f64, q_next: f64, a: f64, c: f64) -> Option<f64> {
    let first = 1.0 / q_next.sqrt();
    let cq = c.powf(q);
    let base = 2.0 / q_next.sqrt();
    let second = cq * base.powf(a.powf(q));
    let v = first + second;
    [first, cq, second, v].iter().all(|x| x.is_normal()).then_some(v)
}

fn sup_displacement(map: &PlanarMap, pts: &[crate::Vec2], q: u64) -> Result<f64> {
    let d = pts
        .par_iter()
        .map(|&x| {
            let mut p = x;
            for i in 0..q {
                p = map.eval(p);
                if !map.contains(p) {
                    return Err(Error::DomainEscape { index: i as usize + 1, point: p.to_array() });
                }
            }
            Ok(map.domain.distance(p, x))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(d.into_iter().fold(0.0, f64::max))
}

/// Compares `‖f^{q_j} − Id‖₀` on a grid with the Hölder iterate bound for
/// each `j` in `j_list`. Rows whose iteration count exceeds `budget` are
/// reported as skipped.
pub fn holder_rigidity_check(
    map: &PlanarMap,
    cf: &ContinuedFraction,
    a: f64,
    c: f64,
    j_list: &[usize],
    grid: GridSpec,
    budget: u64,
) -> Result<HolderReport> {
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::InvalidParameter(format!("holder exponent must lie in (0, 1], got {a}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("holder constant must be positive, got {c}")));
    }
    let pts = grid.points(&map.domain);
    let mut rows = Vec::with_capacity(j_list.len());
    for &j in j_list {
        if j + 1 > cf.depth {
            return Err(Error::DepthExceeded { requested: j + 1, depth: cf.depth });
        }
        let (ln_q, ln_q_next) = (cf.ln_q(j), cf.ln_q(j + 1));
        let ln_bound = holder_ln_bound(cf.q_f64(j), ln_q_next, a, c);
        let q = cf.q_u64(j);
        let cost = q.and_then(|q| q.checked_mul(pts.len() as u64));
        let (measured, skipped) = match (q, cost) {
            (Some(q), Some(cost)) if cost <= budget => (Some(sup_displacement(map, &pts, q)?), None),
            _ => {
                let e = Error::InfeasibleIterationCount(q.unwrap_or(u64::MAX));
                (None, Some(e.to_string()))
            }
        };
        rows.push(HolderRow {
            j,
            ln_q,
            ln_q_next,
            q,
            measured,
            ln_bound,
            bound: ln_bound.exp(),
            holds: measured.map(|m| m == 0.0 || m.ln() <= ln_bound),
            skipped,
        });
    }
    Ok(HolderReport { holder_exponent: a, holder_constant: c, grid, points: pts.len(), iteration_budget: budget, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::{cf_expand, IrrationalSpec};
    use proptest::prelude::*;

    #[test]
    fn rotation_measured_side_is_closed_form() {
        let alpha = IrrationalSpec::golden_mean();
        let cf = cf_expand(&alpha, 20).unwrap();
        let eps = alpha.to_f64();
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", eps)]).unwrap();
        let r = holder_rigidity_check(&f, &cf, 1.0, 1.0, &[3, 6, 9, 12], GridSpec::square(9), DEFAULT_ITERATION_BUDGET).unwrap();
        let mut last = f64::INFINITY;
        for row in &r.rows {
            let q = row.q.unwrap() as f64;
            let x = q * eps;
            let closed = 2.0 * (std::f64::consts::PI * (x - x.round()).abs()).sin();
            let m = row.measured.unwrap();
            assert!((m - closed).abs() < 1e-9 + 1e-6 * closed, "j={} {m} vs {closed}", row.j);
            assert!(m < last);
            last = m;
        }
    }

    #[test]
    fn identity_measures_zero() {
        let cf = cf_expand(&IrrationalSpec::golden_mean(), 10).unwrap();
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", 0.0)]).unwrap();
        let r = holder_rigidity_check(&f, &cf, 0.5, 2.0, &[2, 5], GridSpec::square(5), 1_000_000).unwrap();
        assert!(r.rows.iter().all(|row| row.measured == Some(0.0) && row.holds == Some(true)));
    }

    #[test]
    fn over_budget_rows_are_skipped() {
        let cf = cf_expand(&IrrationalSpec::golden_mean(), 40).unwrap();
        let f = PlanarMap::from_name("rigid-rotation", &[("eps", 0.6)]).unwrap();
        let r = holder_rigidity_check(&f, &cf, 1.0, 1.0, &[2, 35], GridSpec::square(5), 10_000).unwrap();
        assert!(r.rows[0].measured.is_some());
        assert!(r.rows[1].measured.is_none() && r.rows[1].skipped.is_some());
        assert!(r.rows[1].ln_bound.is_finite());
    }

    #[test]
    fn lipschitz_bound_is_elementary() {
        let (q, qn, c) = (13.0f64, 21.0f64, 1.1f64);
        let direct = 1.0 / qn.sqrt() + c.powf(q) * 2.0 / qn.sqrt();
        assert!((holder_ln_bound(q, qn.ln(), 1.0, c).exp() - direct).abs() < 1e-12 * direct);
    }

    proptest! {
        #[test]
        fn log_domain_matches_direct(q in 1u32..400, step in 1u32..4000, a in 0.05f64..=1.0, c in 1.0f64..3.0) {
            let (q, qn) = (q as f64, (q + step) as f64);
            if let Some(d) = holder_bound_direct(q, qn, a, c) {
                let l = holder_ln_bound(q, qn.ln(), a, c).exp();
                prop_assert!((l - d).abs() <= 1e-12 * d, "{} vs {}", l, d);
            }
        }
    }
}
