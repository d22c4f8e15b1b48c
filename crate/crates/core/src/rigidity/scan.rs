use crate::error::{Error, Result};
use crate::maps::{growth_rate, GridSpec, PlanarMap};
use crate::pipeline::{run_pipeline, PipelineOptions, PipelineReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    /// Reject sequences violating `q_0 ≥ H`, `q_n ≥ H^{q_{n−1}}` instead of recording them.
    pub strict: bool,
    /// Side of the grid used for the sampled sup of `‖Df^{q_n}‖`.
    pub grid: usize,
    /// Cap on `q_n · grid points`; the scan stops (truncated) beyond it.
    pub iteration_budget: u64,
    pub run_pipeline: bool,
    pub pipeline: PipelineOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { strict: false, grid: 17, iteration_budget: 200_000_000, run_pipeline: true, pipeline: PipelineOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: usize,
    pub q: u64,
    #[serde(with = "crate::format::ext_f64")]
    pub log_sup_norm: f64,
    /// `(1/q_n) log sup ‖Df^{q_n}‖`.
    #[serde(with = "crate::format::ext_f64")]
    pub rate: f64,
    /// `θⁿ`.
    pub threshold: f64,
    pub hit: bool,
    /// Grid points whose orbits stayed in the domain.
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Handoff {
    /// `g = f^power`.
    pub power: u64,
    /// Horizon for `g`.
    pub q: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthGapReport {
    pub theta: f64,
    #[serde(rename = "H")]
    pub h: f64,
    pub q_sequence: Vec<u64>,
    pub violations: Vec<String>,
    pub rows: Vec<ScanRow>,
    pub hit: Option<usize>,
    /// Reason the scan stopped before exhausting the sequence.
    pub truncated: Option<String>,
    pub handoff: Option<Handoff>,
    pub pipeline: Option<PipelineReport>,
    pub pipeline_error: Option<String>,
}

/// Violations of `q_0 ≥ H` and `q_n ≥ H^{q_{n−1}}`, compared in log domain.
pub fn sequence_violations(q: &[u64], h: f64) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(&q0) = q.first() {
        if (q0 as f64) < h {
            out.push(format!("q_0 = {q0} < H = {h}"));
        }
    }
    for n in 1..q.len() {
        if ((q[n] as f64).ln()) < q[n - 1] as f64 * h.ln() {
            out.push(format!("q_{n} = {} < H^q_{} = {h}^{}", q[n], n - 1, q[n - 1]));
        }
    }
    out
}

/// Finds the first `n` with `(1/q_n) log ‖Df^{q_n}‖ > θⁿ` and, on a hit,
/// runs the certification pipeline on `g = f^{q_{n−1}}` with horizon
/// `q_n / q_{n−1}`. A hit at `n = 0` uses `g = f` with the pipeline horizon.
pub fn growth_gap_scan(map: &PlanarMap, q_sequence: &[u64], theta: f64, h: f64, opts: &ScanOptions) -> Result<GrowthGapReport> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!("theta must lie in (0, 1], got {theta}")));
    }
    if !(h > 1.0) {
        return Err(Error::InvalidParameter(format!("H must exceed 1, got {h}")));
    }
    if q_sequence.is_empty() || q_sequence.contains(&0) {
        return Err(Error::InvalidParameter("q_sequence must be nonempty and positive".into()));
    }
    let violations = sequence_violations(q_sequence, h);
    if opts.strict && !violations.is_empty() {
        return Err(Error::PreconditionViolated(violations.join("; ")));
    }
    let pts = GridSpec::square(opts.grid).points(&map.domain);
    let mut report = GrowthGapReport {
        theta,
        h,
        q_sequence: q_sequence.to_vec(),
        violations,
        rows: Vec::new(),
        hit: None,
        truncated: None,
        handoff: None,
        pipeline: None,
        pipeline_error: None,
    };
    for (n, &q) in q_sequence.iter().enumerate() {
        if q.saturating_mul(pts.len() as u64) > opts.iteration_budget {
            report.truncated = Some(Error::InfeasibleIterationCount(q).to_string());
            break;
        }
        let rates: Vec<f64> = pts.par_iter().filter_map(|&p| growth_rate(map, p, q as usize).ok()).collect();
        let rate = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let threshold = theta.powi(n as i32);
        let hit = rate > threshold;
        report.rows.push(ScanRow { n, q, log_sup_norm: rate * q as f64, rate, threshold, hit, points: rates.len() });
        if hit {
            report.hit = Some(n);
            break;
        }
    }
    let Some(n) = report.hit else { return Ok(report) };
    let handoff = if n == 0 {
        Handoff { power: 1, q: opts.pipeline.q }
    } else {
        Handoff { power: q_sequence[n - 1], q: (q_sequence[n] / q_sequence[n - 1]) as usize }
    };
    report.handoff = Some(handoff);
    if opts.run_pipeline {
        let g = map.power(handoff.power)?;
        let popts = PipelineOptions { q: handoff.q, ..opts.pipeline.clone() };
        match run_pipeline(&g, &popts) {
            Ok(r) => report.pipeline = Some(r),
            Err(e) => report.pipeline_error = Some(e.to_string()),
        }
    }
    Ok(report)
}
