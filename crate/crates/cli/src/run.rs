//! Executes an [`ExperimentConfig`] and collects everything a run emits.

use crate::config::*;
use anyhow::{bail, Context};
use growthgap::arithmetic::{brjuno_partial_sum, cf_expand, cf_expand_available, classify, nonbrjuno_subsequence, IrrationalSpec};
use growthgap::certifier::{pipeline_min_return, Diagnostics, HyperbolicityCertificate};
use growthgap::cocycle::{find_good_point, GoodPointCertificate, SearchOptions};
use growthgap::format::to_json_string;
use growthgap::maps::{derivative_growth, PlanarMap};
use growthgap::pipeline::{ranked_seeds, run_pipeline, AChoice, PipelineOutcome, AUTO_A_FACTOR, MIN_GROWTH};
use growthgap::rigidity::{
    displacement_bound, free_disc_search, growth_gap_scan, holder_rigidity_check, kac_return_stats, Disc, ScanOptions,
    DEFAULT_ITERATION_BUDGET,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotFound,
    Error,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NotFound => 2,
            Status::Error => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NotFound => "not-found",
            Status::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub result: Value,
    pub error: Option<String>,
    pub truncated: Option<String>,
    pub csv: Option<Table>,
    /// Files to write: `(path, contents)`.
    pub artifacts: Vec<(PathBuf, String)>,
}

impl Outcome {
    fn new<T: Serialize>(status: Status, result: &T) -> anyhow::Result<Self> {
        Ok(Outcome { status, result: serde_json::to_value(result)?, error: None, truncated: None, csv: None, artifacts: Vec::new() })
    }

    fn with_csv(mut self, header: &[&'static str], rows: Vec<Vec<f64>>) -> Self {
        self.csv = Some(Table { header: header.to_vec(), rows });
        self
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

struct Deadline(Option<(Instant, f64)>);

impl Deadline {
    fn passed(&self) -> bool {
        self.0.is_some_and(|(t, s)| t.elapsed().as_secs_f64() > s)
    }
}

fn build_map(cfg: &ExperimentConfig) -> anyhow::Result<PlanarMap> {
    let spec = cfg.map.as_ref().with_context(|| format!("operation `{}` needs a map", cfg.run.name()))?;
    Ok(spec.build()?)
}

pub fn execute(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    let deadline = Deadline(cfg.budget.max_wall_seconds.map(|s| (Instant::now(), s)));
    let budget = cfg.budget.max_iterations;
    match &cfg.run {
        Operation::Arith(p) => arith(p),
        Operation::Growth(p) => growth(&build_map(cfg)?, p, budget, &deadline),
        Operation::GrowthGap(p) => growth_gap(&build_map(cfg)?, p, budget, &cfg.outputs),
        Operation::Goodpoint(p) => goodpoint(&build_map(cfg)?, p, &cfg.outputs),
        Operation::Certify(p) => {
            let map = build_map(cfg)?;
            let report = run_pipeline(&map, p)?;
            let mut out = Outcome::new(Status::Ok, &report)?;
            let diag = match &report.outcome {
                PipelineOutcome::Certified { certificate } => {
                    if let Some(path) = &cfg.outputs.out {
                        out.artifacts.push((path.clone(), to_json_string(certificate.as_ref())?));
                    }
                    Some(Diagnostics { stage: "done".into(), steps: certificate.steps.clone(), ..Default::default() })
                }
                PipelineOutcome::NotFound { reason } => {
                    out.status = Status::NotFound;
                    out.error = Some(reason.clone());
                    None
                }
                PipelineOutcome::Failed { stage, error, diagnostics } => {
                    out.status = Status::Error;
                    out.error = Some(format!("{stage}: {error}"));
                    Some(diagnostics.as_ref().clone())
                }
            };
            if let (Some(path), Some(d)) = (&cfg.outputs.diagnostics, diag) {
                out.artifacts.push((path.clone(), csv_string(&Diagnostics::STEP_HEADER, &d.step_rows())?));
            }
            Ok(out)
        }
        Operation::VerifyCert(p) => verify_cert(p),
        Operation::Displacement(p) => {
            let r = displacement_bound(&build_map(cfg)?, p.eps, p.grid)?;
            let row = vec![r.eps, r.lhs, r.max_ball_diameter, r.rhs, r.margin, flag(r.holds)];
            Ok(Outcome::new(Status::Ok, &r)?.with_csv(&["eps", "lhs", "max_ball_diameter", "rhs", "margin", "holds"], vec![row]))
        }
        Operation::FreeDisc(p) => {
            let r = free_disc_search(&build_map(cfg)?, p.eps, p.trials, p.horizon, cfg.rng_seed)?;
            let rows = r.top.iter().map(|t| vec![t.trial as f64, t.center[0], t.center[1], t.radius, t.measure]).collect();
            Ok(Outcome::new(Status::Ok, &r)?.with_csv(&["trial", "center_x", "center_y", "radius", "measure"], rows))
        }
        Operation::Kac(p) => {
            let disc = Disc { center: p.center, radius: p.radius };
            let r = kac_return_stats(&build_map(cfg)?, disc, p.samples, p.horizon, cfg.rng_seed)?;
            let row = vec![
                r.samples as f64,
                r.returned as f64,
                r.mean_return,
                r.capped_fraction,
                r.disc_measure,
                r.kac_product,
                r.ratio.unwrap_or(f64::NAN),
            ];
            let header = ["samples", "returned", "mean_return", "capped_fraction", "disc_measure", "kac_product", "ratio"];
            Ok(Outcome::new(Status::Ok, &r)?.with_csv(&header, vec![row]))
        }
        Operation::Holder(p) => holder(&build_map(cfg)?, p, budget, &deadline),
    }
}

pub fn csv_string(header: &[&str], rows: &[Vec<f64>]) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    growthgap::format::write_csv(&mut buf, header, rows)?;
    Ok(String::from_utf8(buf)?)
}

fn arith(p: &ArithParams) -> anyhow::Result<Outcome> {
    let alpha: IrrationalSpec = p.alpha.parse()?;
    let cf = if p.available { cf_expand_available(&alpha, p.depth)? } else { cf_expand(&alpha, p.depth)? };
    let classification = classify(&cf, &p.thresholds).map_err(|e| e.to_string());
    let subsequence = nonbrjuno_subsequence(&cf, p.h, p.max_terms).map_err(|e| e.to_string());
    let mut rows = Vec::with_capacity(cf.depth);
    let mut partial_sums = Vec::with_capacity(cf.depth);
    for n in 0..cf.depth {
        let s = brjuno_partial_sum(&cf, n)?;
        partial_sums.push(s);
        let a_next = cf.partial_quotients[n].to_string().parse::<f64>().unwrap_or(f64::INFINITY);
        rows.push(vec![n as f64, cf.q_f64(n), cf.ln_q(n), a_next, cf.brjuno_term(n), s]);
    }
    let q: Vec<String> = cf.convergents.iter().map(|(_, q)| q.to_string()).collect();
    let result = json!({
        "alpha": alpha.to_string(),
        "value": alpha.to_f64(),
        "continued_fraction": cf,
        "q": q,
        "brjuno_partial_sums": partial_sums,
        "classification": classification.as_ref().map_or_else(|e| json!({ "error": e }), |c| serde_json::to_value(c).unwrap_or(Value::Null)),
        "subsequence": subsequence.as_ref().map_or_else(|e| json!({ "error": e }), |s| serde_json::to_value(s).unwrap_or(Value::Null)),
    });
    let mut out = Outcome::new(Status::Ok, &result)?;
    out = out.with_csv(&["n", "q_n", "ln_q_n", "a_next", "brjuno_term", "partial_sum"], rows);
    Ok(out)
}

fn growth(map: &PlanarMap, p: &GrowthParams, budget: Option<u64>, deadline: &Deadline) -> anyhow::Result<Outcome> {
    let pts = p.grid.points(&map.domain);
    let budget = budget.unwrap_or(u64::MAX);
    let mut rows = Vec::new();
    let mut truncated = None;
    for &n in &p.n_list {
        if (n as u64).saturating_mul(pts.len() as u64) > budget {
            truncated = Some(format!("n = {n} exceeds the iteration budget {budget}"));
            break;
        }
        if deadline.passed() {
            truncated = Some(format!("wall-time budget reached before n = {n}"));
            break;
        }
        rows.extend(derivative_growth(map, &[n], &pts)?);
    }
    let csv = rows.iter().map(|r| vec![r.n as f64, r.log_sup_norm, r.rate, r.argmax.x, r.argmax.y]).collect();
    let mut out = Outcome::new(Status::Ok, &rows)?.with_csv(&["n", "log_sup_norm", "rate", "argmax_x", "argmax_y"], csv);
    out.truncated = truncated;
    Ok(out)
}

fn growth_gap(map: &PlanarMap, p: &GrowthGapParams, budget: Option<u64>, outputs: &Outputs) -> anyhow::Result<Outcome> {
    let opts = ScanOptions {
        strict: p.strict,
        grid: p.grid,
        iteration_budget: budget.unwrap_or(DEFAULT_ITERATION_BUDGET),
        run_pipeline: p.run_pipeline,
        pipeline: p.pipeline.clone(),
    };
    let r = growth_gap_scan(map, &p.q_sequence, p.theta, p.h, &opts)?;
    let rows = r
        .rows
        .iter()
        .map(|x| vec![x.n as f64, x.q as f64, x.log_sup_norm, x.rate, x.threshold, flag(x.hit), x.points as f64])
        .collect();
    let mut out = Outcome::new(Status::Ok, &r)?.with_csv(&["n", "q", "log_sup_norm", "rate", "threshold", "hit", "points"], rows);
    out.truncated = r.truncated.clone();
    if r.hit.is_none() {
        out.status = Status::NotFound;
        out.error = Some("no index satisfies the growth condition".into());
    } else if let Some(e) = &r.pipeline_error {
        out.status = Status::Error;
        out.error = Some(e.clone());
    } else if let Some(pr) = &r.pipeline {
        match &pr.outcome {
            PipelineOutcome::Certified { certificate } => {
                if let Some(path) = &outputs.out {
                    out.artifacts.push((path.clone(), to_json_string(certificate.as_ref())?));
                }
            }
            PipelineOutcome::NotFound { reason } => {
                out.status = Status::NotFound;
                out.error = Some(reason.clone());
            }
            PipelineOutcome::Failed { stage, error, .. } => {
                out.status = Status::Error;
                out.error = Some(format!("{stage}: {error}"));
            }
        }
    }
    Ok(out)
}

fn goodpoint(map: &PlanarMap, p: &GoodpointParams, outputs: &Outputs) -> anyhow::Result<Outcome> {
    let (candidates, mut seeds) = ranked_seeds(map, p.q, p.grid, p.halton);
    seeds.truncate(p.seeds);
    let top = seeds.first().map_or(f64::NEG_INFINITY, |s| s.growth);
    let a = match p.a {
        AChoice::Value(a) => a,
        AChoice::Keyword(_) if top > MIN_GROWTH => top * AUTO_A_FACTOR,
        AChoice::Keyword(_) => {
            let mut out = Outcome::new(Status::NotFound, &json!({ "candidates": candidates, "seeds": seeds }))?;
            out.error = Some(format!("no seed with derivative growth (best rate {top:e})"));
            return Ok(out);
        }
    };
    let min_return = p.min_return.unwrap_or_else(|| pipeline_min_return(a));
    let points: Vec<_> = seeds.iter().map(|s| s.point).collect();
    let search = find_good_point(map, &points, p.q, a, &SearchOptions { match_radius: p.match_radius, min_return })?;
    let result = json!({ "a": a, "min_return": min_return, "candidates": candidates, "seeds": seeds, "search": search });
    let mut out = Outcome::new(Status::Ok, &result)?;
    match search.certificate() {
        Some(c) => {
            if let Some(path) = &outputs.out {
                out.artifacts.push((path.clone(), to_json_string(c)?));
            }
        }
        None => {
            out.status = Status::NotFound;
            out.error = Some("no (q, a)-good point among the seeds".into());
        }
    }
    Ok(out)
}

fn verify_cert(p: &VerifyParams) -> anyhow::Result<Outcome> {
    let text = std::fs::read_to_string(&p.certificate).with_context(|| format!("reading {}", p.certificate.display()))?;
    let kind;
    if let Ok(c) = serde_json::from_str::<HyperbolicityCertificate>(&text) {
        kind = "hyperbolicity";
        c.verify()?;
    } else if let Ok(c) = serde_json::from_str::<GoodPointCertificate>(&text) {
        kind = "good-point";
        c.verify()?;
    } else {
        bail!("{} is not a certificate produced by this tool", p.certificate.display());
    }
    Outcome::new(Status::Ok, &json!({ "certificate": p.certificate, "kind": kind, "verified": true }))
}

fn holder(map: &PlanarMap, p: &HolderParams, budget: Option<u64>, deadline: &Deadline) -> anyhow::Result<Outcome> {
    let alpha: IrrationalSpec = p.alpha.parse()?;
    let need = p.j_list.iter().max().map_or(1, |j| j + 1);
    let cf = cf_expand_available(&alpha, need)?;
    let budget = budget.unwrap_or(DEFAULT_ITERATION_BUDGET);
    let mut rows = Vec::new();
    let mut truncated = None;
    for &j in &p.j_list {
        if deadline.passed() {
            truncated = Some(format!("wall-time budget reached before j = {j}"));
            break;
        }
        let r = holder_rigidity_check(map, &cf, p.holder_exponent, p.holder_constant, &[j], p.grid, budget)?;
        rows.extend(r.rows);
    }
    let csv = rows
        .iter()
        .map(|r| vec![r.j as f64, r.ln_q, r.ln_q_next, r.measured.unwrap_or(f64::NAN), r.ln_bound, r.holds.map_or(f64::NAN, flag)])
        .collect();
    let result = json!({
        "alpha": alpha.to_string(),
        "holder_exponent": p.holder_exponent,
        "holder_constant": p.holder_constant,
        "iteration_budget": budget,
        "rows": rows,
    });
    let mut out = Outcome::new(Status::Ok, &result)?.with_csv(&["j", "ln_q", "ln_q_next", "measured", "ln_bound", "holds"], csv);
    out.truncated = truncated;
    Ok(out)
}
