//! Seeds → `(q, a)`-good point → hyperbolicity certificate.

use crate::certifier::{certify_with_diagnostics, pipeline_min_return, CertifyOptions, Diagnostics, HyperbolicityCertificate};
use crate::cocycle::{find_good_point, GoodPointSearch, SearchOptions};
use crate::error::{Error, Result};
use crate::linalg::Vec2;
use crate::maps::{growth_rate, GridSpec, PlanarMap};
use crate::seeds::halton;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// `a` is either given or derived from the best seed's growth rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AChoice {
    Value(f64),
    Keyword(AutoKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

impl AChoice {
    pub const AUTO: AChoice = AChoice::Keyword(AutoKeyword::Auto);

    pub fn parse(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(AChoice::AUTO);
        }
        s.parse::<f64>()
            .ok()
            .filter(|a| *a > 0.0 && a.is_finite())
            .map(AChoice::Value)
            .ok_or_else(|| Error::InvalidParameter(format!("a must be `auto` or a positive number, got `{s}`")))
    }
}

/// Measured rate sits this far inside the `(1 − 1/1000)a < λ ≤ a` window.
pub const AUTO_A_FACTOR: f64 = 2000.0 / 1999.0;
/// Growth rates at or below this are treated as no growth.
pub const MIN_GROWTH: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    pub q: usize,
    pub a: AChoice,
    /// Side of the vertex-aligned seed grid.
    pub grid: usize,
    /// Extra Halton seeds.
    pub halton: usize,
    /// Seeds kept after ranking.
    pub seeds: usize,
    pub match_radius: Option<f64>,
    pub certify: CertifyOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            q: 100_000,
            a: AChoice::AUTO,
            grid: 17,
            halton: 64,
            seeds: 16,
            match_radius: None,
            certify: CertifyOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedSeed {
    pub point: Vec2,
    /// `(1/q) log ‖Dg^q‖` at the seed.
    pub growth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum PipelineOutcome {
    NotFound { reason: String },
    Certified { certificate: Box<HyperbolicityCertificate> },
    Failed { stage: String, error: String, diagnostics: Box<Diagnostics> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub map: String,
    pub q: usize,
    pub a: Option<f64>,
    pub a_auto: bool,
    pub candidates: usize,
    pub seeds: Vec<RankedSeed>,
    pub min_return: Option<usize>,
    pub search: Option<GoodPointSearch>,
    pub outcome: PipelineOutcome,
}

impl PipelineReport {
    pub fn certificate(&self) -> Option<&HyperbolicityCertificate> {
        match &self.outcome {
            PipelineOutcome::Certified { certificate } => Some(certificate),
            _ => None,
        }
    }
}

/// Grid plus Halton candidates ranked by growth at horizon `q`, best first.
/// Orbits leaving the domain are dropped.
pub fn ranked_seeds(map: &PlanarMap, q: usize, grid: usize, extra: usize) -> (usize, Vec<RankedSeed>) {
    let mut pool = GridSpec::square(grid).points(&map.domain);
    pool.extend(halton(&map.domain, extra));
    let mut ranked: Vec<(usize, RankedSeed)> = pool
        .par_iter()
        .enumerate()
        .filter_map(|(i, &p)| growth_rate(map, p, q).ok().filter(|g| g.is_finite()).map(|g| (i, RankedSeed { point: p, growth: g })))
        .collect();
    ranked.sort_by(|(i, a), (j, b)| b.growth.total_cmp(&a.growth).then(i.cmp(j)));
    (pool.len(), ranked.into_iter().map(|(_, s)| s).collect())
}

/// Runs the full pipeline on `map`.
pub fn run_pipeline(map: &PlanarMap, opts: &PipelineOptions) -> Result<PipelineReport> {
    if opts.q < 2 || opts.seeds == 0 {
        return Err(Error::InvalidParameter("pipeline needs q >= 2 and at least one seed".into()));
    }
    let (candidates, mut seeds) = ranked_seeds(map, opts.q, opts.grid, opts.halton);
    seeds.truncate(opts.seeds);
    let mut report = PipelineReport {
        map: map.label.clone(),
        q: opts.q,
        a: None,
        a_auto: matches!(opts.a, AChoice::Keyword(_)),
        candidates,
        seeds,
        min_return: None,
        search: None,
        outcome: PipelineOutcome::NotFound { reason: String::new() },
    };
    let top = report.seeds.first().map_or(f64::NEG_INFINITY, |s| s.growth);
    let a = match opts.a {
        AChoice::Value(a) => a,
        AChoice::Keyword(_) if top > MIN_GROWTH => top * AUTO_A_FACTOR,
        AChoice::Keyword(_) => {
            report.outcome = PipelineOutcome::NotFound { reason: format!("no seed with derivative growth (best rate {top:e})") };
            return Ok(report);
        }
    };
    report.a = Some(a);
    let min_return = pipeline_min_return(a);
    report.min_return = Some(min_return);
    let points: Vec<Vec2> = report.seeds.iter().map(|s| s.point).collect();
    let search = find_good_point(map, &points, opts.q, a, &SearchOptions { match_radius: opts.match_radius, min_return })?;
    let gp = search.certificate().cloned();
    report.search = Some(search);
    let Some(gp) = gp else {
        report.outcome = PipelineOutcome::NotFound { reason: "no (q, a)-good point among the seeds".into() };
        return Ok(report);
    };
    let (cert, diagnostics) = certify_with_diagnostics(map, &gp, &opts.certify);
    report.outcome = match cert {
        Ok(c) => PipelineOutcome::Certified { certificate: Box::new(c) },
        Err(e) => PipelineOutcome::Failed { stage: diagnostics.stage.clone(), error: e.to_string(), diagnostics: Box::new(diagnostics) },
    };
    Ok(report)
}
