use super::cf::{distance_to_integers, ContinuedFraction};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// `Σ_{n=0}^{N} ln(q_{n+1}) / q_n`.
pub fn brjuno_partial_sum(cf: &ContinuedFraction, n: usize) -> Result<f64> {
    if n + 1 > cf.depth {
        return Err(Error::DepthExceeded { requested: n, depth: cf.depth });
    }
    let mut acc = crate::linalg::CompensatedSum::default();
    for k in 0..=n {
        acc.add(cf.brjuno_term(k));
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationThresholds {
    /// Bound on `max_n q_n⁻¹ ln q_{n+1}`.
    pub super_liouville: f64,
    /// Bound on the Brjuno partial sum at full depth.
    pub brjuno_divergence: f64,
}

impl Default for ClassificationThresholds {
    fn default() -> Self {
        ClassificationThresholds { super_liouville: 2.0, brjuno_divergence: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    BrjunoConsistent,
    NonBrjunoEvidence,
    SuperLiouvilleEvidence,
}

/// Finite-depth evidence; never a claim about the infinite expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub class: Classification,
    pub depth: usize,
    pub thresholds: ClassificationThresholds,
    pub max_ratio: f64,
    pub max_ratio_index: usize,
    pub partial_sum: f64,
    pub witness: Vec<usize>,
}

pub fn classify(cf: &ContinuedFraction, thresholds: &ClassificationThresholds) -> Result<ClassificationReport> {
    if cf.depth < 3 {
        return Err(Error::InvalidParameter(format!("classification needs depth >= 3, got {}", cf.depth)));
    }
    let terms: Vec<f64> = (0..cf.depth).map(|n| cf.brjuno_term(n)).collect();
    let (max_ratio_index, max_ratio) =
        terms.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, t)| if t > b.1 { (i, t) } else { b });
    let partial_sum = brjuno_partial_sum(cf, cf.depth - 1)?;
    let (class, witness) = if max_ratio > thresholds.super_liouville {
        let w = terms.iter().enumerate().filter(|(_, t)| **t > thresholds.super_liouville).map(|(i, _)| i).collect();
        (Classification::SuperLiouvilleEvidence, w)
    } else if partial_sum > thresholds.brjuno_divergence {
        (Classification::NonBrjunoEvidence, (0..cf.depth).collect())
    } else {
        (Classification::BrjunoConsistent, vec![max_ratio_index])
    };
    Ok(ClassificationReport { class, depth: cf.depth, thresholds: *thresholds, max_ratio, max_ratio_index, partial_sum, witness })
}

/// One block `[m_j, m_{j+1})` of the growth decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub j: usize,
    pub start: usize,
    pub end: usize,
    pub block_sum: f64,
    /// Selected `l_j`, when the block qualifies.
    pub selected: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonBrjunoSubsequence {
    pub h: f64,
    /// Convergent indices `n_j` (term `j` is at position `j − 1`).
    pub indices: Vec<usize>,
    /// Terms `j` (1-based) with `‖q_{n_j} α‖ < exp(−q_{n_j}/j²)`.
    pub flagged: Vec<usize>,
    /// `ln ‖q_{n_j} α‖` for every returned term.
    #[serde(with = "crate::format::ext_f64_vec")]
    pub ln_distances: Vec<f64>,
    pub parity: Parity,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Parity {
    Even,
    Odd,
}

/// Block construction: boundaries `m_j` split where `q_m ≥ H^{q_{m_{j−1}}}`,
/// qualifying blocks carry `Σ ln q_{m+1}/q_m ≥ j^{-3/2}` and contribute the first
/// `l_j` with `ln q_{l+1} / q_l ≥ j^{-1.6}`; one parity class of `j` is kept.
pub fn nonbrjuno_subsequence(cf: &ContinuedFraction, h: f64, max_terms: usize) -> Result<NonBrjunoSubsequence> {
    if !(h > 1.0) {
        return Err(Error::InvalidParameter(format!("H must exceed 1, got {h}")));
    }
    let ln_h = h.ln();
    let mut blocks = Vec::new();
    let mut start = 0usize;
    let mut j = 1usize;
    loop {
        // smallest m > start with ln q_m ≥ q_start · ln H
        let target = cf.q_f64(start) * ln_h;
        let end = (start + 1..=cf.depth).find(|&m| cf.ln_q(m) >= target);
        let Some(end) = end else { break };
        let block_sum: f64 = (start..end).map(|m| cf.brjuno_term(m)).sum();
        let jf = j as f64;
        let selected = if block_sum >= jf.powf(-1.5) {
            (start..end).find(|&l| cf.brjuno_term(l) >= jf.powf(-1.6))
        } else {
            None
        };
        blocks.push(Block { j, start, end, block_sum, selected });
        start = end;
        j += 1;
    }
    if blocks.is_empty() {
        return Err(Error::InsufficientDepth { produced: 0, depth: cf.depth });
    }
    let family = |par: usize| -> Vec<usize> {
        blocks.iter().filter(|b| b.j % 2 == par).filter_map(|b| b.selected).collect()
    };
    let (even, odd) = (family(0), family(1));
    let (parity, mut indices) = if odd.len() > even.len() { (Parity::Odd, odd) } else { (Parity::Even, even) };
    indices.truncate(max_terms);
    let mut flagged = Vec::new();
    let mut ln_distances = Vec::new();
    for (pos, &n) in indices.iter().enumerate() {
        let jj = (pos + 1) as f64;
        let d = distance_to_integers(&cf.alpha, cf.q(n))?;
        ln_distances.push(d.ln);
        if d.ln < -cf.q_f64(n) / (jj * jj) {
            flagged.push(pos + 1);
        }
    }
    for w in indices.windows(2) {
        debug_assert!(cf.ln_q(w[1]) >= cf.q_f64(w[0]) * ln_h);
    }
    Ok(NonBrjunoSubsequence { h, indices, flagged, ln_distances, parity, blocks })
}

#[cfg(test)]
mod tests {
    use super::super::cf::cf_expand;
    use super::*;
    use crate::IrrationalSpec;

    #[test]
    fn single_term_sum() {
        let cf = cf_expand(&IrrationalSpec::golden_mean(), 5).unwrap();
        assert_eq!(brjuno_partial_sum(&cf, 0).unwrap(), 0.0);
        let s2: IrrationalSpec = "surd:1,-1,2,1".parse().unwrap();
        let cf = cf_expand(&s2, 5).unwrap();
        assert!((brjuno_partial_sum(&cf, 0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!(matches!(brjuno_partial_sum(&cf, 5), Err(Error::DepthExceeded { .. })));
    }

    #[test]
    fn golden_mean_is_brjuno_consistent() {
        let cf = cf_expand(&IrrationalSpec::golden_mean(), 40).unwrap();
        let r = classify(&cf, &ClassificationThresholds::default()).unwrap();
        assert_eq!(r.class, Classification::BrjunoConsistent);
    }

    #[test]
    fn liouville_is_super_liouville_evidence() {
        let a = IrrationalSpec::liouville(6).unwrap();
        let cf = cf_expand(&a, 8).unwrap();
        let r = classify(&cf, &ClassificationThresholds::default()).unwrap();
        assert_eq!(r.class, Classification::SuperLiouvilleEvidence);
    }

    #[test]
    fn golden_subsequence_is_short_and_unflagged() {
        let cf = cf_expand(&IrrationalSpec::golden_mean(), 40).unwrap();
        let s = nonbrjuno_subsequence(&cf, 2.0, 100).unwrap();
        assert!(s.indices.len() <= 2, "{:?}", s.indices);
        assert!(s.flagged.is_empty());
        assert!(nonbrjuno_subsequence(&cf, 2.0, 0).unwrap().indices.is_empty());
    }

    #[test]
    fn rejects_bad_h() {
        let cf = cf_expand(&IrrationalSpec::golden_mean(), 10).unwrap();
        assert!(nonbrjuno_subsequence(&cf, 1.0, 3).is_err());
    }
}
