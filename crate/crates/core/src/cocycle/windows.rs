use super::trace::CocycleTrace;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Goodness threshold factor `1 − 1/1000`.
pub const GOOD_FACTOR: f64 = 1.0 - 1.0 / 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlissSelection {
    pub indices: Vec<usize>,
    /// `(l' − l'')/(l − l'') · n`, the guaranteed count.
    pub guaranteed: f64,
}

/// Indices `i` from which every forward window average exceeds `l2`.
///
/// Uses `T_m = Σ_{j<m} seq_j − l2·m`: `i` qualifies iff `T_i < T_m` for all
/// `m > i`, so a suffix minimum gives the answer in one pass.
pub fn pliss_indices(seq: &[f64], l: f64, l1: f64, l2: f64) -> Result<PlissSelection> {
    let n = seq.len();
    if n == 0 {
        return Err(Error::PreconditionViolated("empty sequence".into()));
    }
    if !(l2 < l1 && l1 < l) {
        return Err(Error::PreconditionViolated(format!("need l'' < l' < l, got {l2}, {l1}, {l}")));
    }
    if let Some((i, v)) = seq.iter().enumerate().find(|(_, v)| **v > l) {
        return Err(Error::PreconditionViolated(format!("seq[{i}] = {v} exceeds l = {l}")));
    }
    let mean = seq.iter().sum::<f64>() / n as f64;
    if !(mean > l1) {
        return Err(Error::PreconditionViolated(format!("mean {mean} does not exceed l' = {l1}")));
    }
    let indices = forward_good(seq, l2);
    let guaranteed = (l1 - l2) / (l - l2) * n as f64;
    if (indices.len() as f64) < guaranteed - 1e-9 {
        return Err(Error::ConsequenceViolated(format!("Pliss count {} below guaranteed {guaranteed}", indices.len())));
    }
    Ok(PlissSelection { indices, guaranteed })
}

/// Indices whose forward window averages (to the end) all exceed `c`.
pub(crate) fn forward_good(seq: &[f64], c: f64) -> Vec<usize> {
    let n = seq.len();
    let mut t = vec![0.0; n + 1];
    for i in 0..n {
        t[i + 1] = t[i] + (seq[i] - c);
    }
    let mut out = Vec::new();
    let mut suffix_min = f64::INFINITY;
    for i in (0..n).rev() {
        suffix_min = suffix_min.min(t[i + 1]);
        if t[i] < suffix_min {
            out.push(i);
        }
    }
    out.reverse();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// `bound` (|λ| ≤ a at step `index`) or `window` (average over `index` steps).
    pub kind: String,
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodCheck {
    pub ok: bool,
    pub violation: Option<Violation>,
    /// Smallest `window average − threshold` over all windows.
    pub window_margin: f64,
}

/// Exponents seen from the checked end: forward reads `0..L`, backward reads
/// the last `L` entries in reverse (`j = −1, −2, …`).
fn oriented<'a>(v: &'a [f64], l: usize, dir: Direction) -> Box<dyn Iterator<Item = f64> + 'a> {
    match dir {
        Direction::Forward => Box::new(v[..l].iter().copied()),
        Direction::Backward => Box::new(v[v.len() - l..].iter().rev().copied()),
    }
}

/// Forward / backward `(L, a)`-goodness of the trace's start / end triple.
pub fn check_good_triple(trace: &CocycleTrace, l: usize, a: f64, dir: Direction) -> GoodCheck {
    assert!(l >= 1 && l <= trace.len(), "trace shorter than L");
    let thr = GOOD_FACTOR * a;
    let s: Vec<f64> = oriented(&trace.lambda_s, l, dir).collect();
    let u: Vec<f64> = oriented(&trace.lambda_u, l, dir).collect();
    let e: Vec<f64> = oriented(&trace.lambda_bar_e, l, dir).collect();
    let mut sum = 0.0;
    let mut violation = None;
    let mut margin = f64::INFINITY;
    for k in 1..=l {
        let j = k - 1;
        let big = s[j].abs().max(u[j].abs());
        if violation.is_none() && big > a {
            violation = Some(Violation { kind: "bound".into(), index: j, lhs: big, rhs: a });
        }
        sum += e[j];
        let avg = sum / k as f64;
        margin = margin.min(avg - thr);
        if violation.is_none() && !(avg > thr) {
            violation = Some(Violation { kind: "window".into(), index: k, lhs: avg, rhs: thr });
        }
    }
    GoodCheck { ok: violation.is_none(), violation, window_margin: margin }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsequenceReport {
    pub direction: Direction,
    /// `min_k (−a/2 − avg λ^s)`.
    pub stable_margin: f64,
    /// `min_k (avg λ^e − (1 − 1/100) a)`.
    pub effective_margin: f64,
    /// `min_k (avg min(3λ^e, 0) + a/10)`; forward only.
    pub negative_part_margin: Option<f64>,
}

/// Derived inequalities for a good triple; fails loudly if any is violated.
pub fn good_consequences(trace: &CocycleTrace, l: usize, a: f64, dir: Direction) -> Result<ConsequenceReport> {
    let chk = check_good_triple(trace, l, a, dir);
    if !chk.ok {
        return Err(Error::PreconditionViolated(format!("triple is not {dir:?} ({l}, {a})-good: {:?}", chk.violation)));
    }
    let s: Vec<f64> = oriented(&trace.lambda_s, l, dir).collect();
    let e: Vec<f64> = oriented(&trace.lambda_e, l, dir).collect();
    let (mut ss, mut se, mut sn) = (0.0, 0.0, 0.0);
    let (mut ms, mut me, mut mn) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for k in 1..=l {
        ss += s[k - 1];
        se += e[k - 1];
        sn += (3.0 * e[k - 1]).min(0.0);
        let kf = k as f64;
        ms = ms.min(-0.5 * a - ss / kf);
        me = me.min(se / kf - (1.0 - 1.0 / 100.0) * a);
        mn = mn.min(sn / kf + 0.1 * a);
    }
    let report = ConsequenceReport {
        direction: dir,
        stable_margin: ms,
        effective_margin: me,
        negative_part_margin: (dir == Direction::Forward).then_some(mn),
    };
    if !(ms > 0.0 && me > 0.0 && report.negative_part_margin.is_none_or(|m| m > 0.0)) {
        return Err(Error::ConsequenceViolated(format!("{report:?}")));
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotEnvelope {
    /// `E_0 = |cot_0|`, `E_{i+1} = e^{2λ^s_i} E_i + A²`.
    pub envelope: Vec<f64>,
    /// `min_i (rhs_i − lhs_i)` for the one-step inequality.
    pub worst_margin: f64,
}

/// One-step cotangent inequality `|cot_{i+1}| ≤ e^{2λ^s_i}|cot_i| + A²`.
pub fn cot_recursion_bound(trace: &CocycleTrace, a_norm: f64) -> Result<CotEnvelope> {
    let a2 = a_norm * a_norm;
    let mut env = vec![trace.cot[0].abs()];
    let mut worst = f64::INFINITY;
    for i in 0..trace.len() {
        let lhs = trace.cot[i + 1].abs();
        let rhs = (2.0 * trace.lambda_s[i]).exp() * trace.cot[i].abs() + a2;
        if lhs > rhs + 1e-8 * rhs.max(1.0) {
            return Err(Error::BoundViolated { step: i, lhs, rhs });
        }
        worst = worst.min(rhs - lhs);
        let e = (2.0 * trace.lambda_s[i]).exp() * env[i] + a2;
        env.push(e);
    }
    Ok(CotEnvelope { envelope: env, worst_margin: worst })
}

/// Indices `n ∈ [1, q−1]` that are good in the orbit: every forward window
/// from `n` (to `q`) and every backward window ending at `n` averages above
/// `(1 − 1/1000) a`. Two monotone scans over `T_m = Σ_{j<m} λ̄^e_j − c·m`.
pub fn good_in_orbit_trace(trace: &CocycleTrace, a: f64) -> Vec<usize> {
    let q = trace.len();
    let c = GOOD_FACTOR * a;
    let mut t = vec![0.0; q + 1];
    for i in 0..q {
        t[i + 1] = t[i] + (trace.lambda_bar_e[i] - c);
    }
    let mut fwd = vec![false; q + 1];
    let mut suffix_min = f64::INFINITY;
    for n in (0..q).rev() {
        suffix_min = suffix_min.min(t[n + 1]);
        fwd[n] = t[n] < suffix_min;
    }
    let mut out = Vec::new();
    let mut prefix_max = t[0];
    for n in 1..q {
        if fwd[n] && t[n] > prefix_max {
            out.push(n);
        }
        prefix_max = prefix_max.max(t[n]);
    }
    out
}

/// Direct `O(q²)` evaluation of the same windows, for cross-checking.
pub fn good_in_orbit_brute(trace: &CocycleTrace, a: f64) -> Vec<usize> {
    let q = trace.len();
    let c = GOOD_FACTOR * a;
    let e = &trace.lambda_bar_e;
    (1..q)
        .filter(|&n| {
            let fwd = (1..=q - n).all(|k| e[n..n + k].iter().sum::<f64>() / (k as f64) > c);
            let bwd = (1..=n).all(|k| e[n - k..n].iter().sum::<f64>() / (k as f64) > c);
            fwd && bwd
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_pliss(seq: &[f64], l2: f64) -> Vec<usize> {
        (0..seq.len())
            .filter(|&i| (1..=seq.len() - i).all(|k| seq[i..i + k].iter().sum::<f64>() / k as f64 > l2))
            .collect()
    }

    #[test]
    fn pliss_small_cases() {
        let r = pliss_indices(&[1.0, -1.0, 1.0, 1.0], 1.0, 0.4, 0.0).unwrap();
        assert_eq!(r.indices, vec![2, 3]);
        assert_eq!(r.indices, brute_pliss(&[1.0, -1.0, 1.0, 1.0], 0.0));
        assert_eq!(pliss_indices(&[1.0], 2.0, 0.5, 0.0).unwrap().indices, vec![0]);
        let c = 0.7;
        assert_eq!(pliss_indices(&[c; 9], c + 1.0, c - 0.5, c - 1.0).unwrap().indices, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn pliss_preconditions() {
        assert!(matches!(pliss_indices(&[3.0], 2.0, 0.5, 0.0), Err(Error::PreconditionViolated(_))));
        assert!(matches!(pliss_indices(&[0.1, 0.1], 2.0, 0.5, 0.0), Err(Error::PreconditionViolated(_))));
        assert!(matches!(pliss_indices(&[1.0], 2.0, 0.0, 0.5), Err(Error::PreconditionViolated(_))));
    }

    fn constant_trace(ls: f64, lu: f64, n: usize) -> CocycleTrace {
        use crate::linalg::Vec2;
        CocycleTrace {
            points: vec![Vec2::default(); n + 1],
            v_s: vec![Vec2::new(0.0, 1.0); n + 1],
            v_u: vec![Vec2::new(1.0, 0.0); n + 1],
            lambda_s: vec![ls; n],
            lambda_u: vec![lu; n],
            lambda_bar_e: vec![super::super::trace::bar_e(ls, lu); n],
            lambda_e: vec![super::super::trace::lambda_e(ls, lu); n],
            cot: vec![0.0; n + 1],
        }
    }

    #[test]
    fn constant_exponents_are_good() {
        let a = 2f64.ln();
        let t = constant_trace(-a, a, 50);
        for dir in [Direction::Forward, Direction::Backward] {
            assert!(check_good_triple(&t, 50, a, dir).ok);
            let r = good_consequences(&t, 50, a, dir).unwrap();
            assert!((r.stable_margin - 0.5 * a).abs() < 1e-12);
            assert!((r.effective_margin - a / 100.0).abs() < 1e-12);
        }
        assert_eq!(good_in_orbit_trace(&t, a), (1..50).collect::<Vec<_>>());
        assert_eq!(good_in_orbit_brute(&t, a), (1..50).collect::<Vec<_>>());
    }

    #[test]
    fn zero_exponents_fail_at_first_window() {
        let t = constant_trace(0.0, 0.0, 10);
        let c = check_good_triple(&t, 10, 0.5, Direction::Forward);
        assert!(!c.ok);
        let v = c.violation.unwrap();
        assert_eq!((v.kind.as_str(), v.index), ("window", 1));
        assert!(good_consequences(&t, 10, 0.5, Direction::Forward).is_err());
        assert!(good_in_orbit_trace(&t, 0.5).is_empty());
    }

    #[test]
    fn cot_recursion_on_eigenframe() {
        let t = constant_trace(-1.0, 1.0, 5);
        let env = cot_recursion_bound(&t, 2.0).unwrap();
        assert_eq!(env.envelope.len(), 6);
        assert!((env.worst_margin - 4.0).abs() < 1e-15);
    }
}
