use super::cones::{analytic_margins, cone_step_check, AnalyticMargins, ConeMode, SampledMargins, StepReport};
use super::frame::{chart_constant, FrameChain, C0_FORMULA};
use super::hyperbolic::{
    closing_residual, fixed_point_degree, iterate_with_jacobian, verify_hyperbolic_like, NewtonReport,
    WindingReport, NEWTON_TOL,
};
use super::ret::{return_map_check, ReturnReport, RETURN_THRESHOLD_FACTOR};
use super::schedule::{build_schedule, BoxSchedule, ScheduleParams, GEOMETRIC_LN_FLOOR};
use super::strips::{build_strip_pair, Crossing, Strip, StripKind, StripLimits, StripPair, DEFAULT_REFINE_BUDGET};
use crate::cocycle::GoodPointCertificate;
use crate::error::{Error, Result};
use crate::linalg::{Spectrum, Vec2};
use crate::maps::{BoundMode, PlanarMap};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const NUMERIC_REGIME: &str =
    "binary64 sampling with analytic sufficient inequalities in log domain; not a computer-assisted proof";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyOptions {
    /// First `M` tried.
    pub m_start: u32,
    /// Last `M` tried; `None` means the largest `M` with representable boxes.
    pub m_max: Option<u32>,
    /// `M` of the log-only schedule recorded alongside.
    pub paper_m: u32,
    pub sampled: bool,
    pub cone_grid: usize,
    pub return_threshold_factor: f64,
    pub refine_budget: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            m_start: 4,
            m_max: None,
            paper_m: 1000,
            sampled: true,
            cone_grid: 9,
            return_threshold_factor: RETURN_THRESHOLD_FACTOR,
            refine_budget: DEFAULT_REFINE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MAttempt {
    pub m: u32,
    /// `None` when every schedule and cone check passed.
    pub failure: Option<String>,
}

/// Worst margin of every verified inequality family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeMarginSummary {
    pub step_kappa: f64,
    pub step_tau: f64,
    pub step_kappa_tilde: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub sampled_forward: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub sampled_backward: f64,
    /// Reported, not gating.
    #[serde(with = "crate::format::ext_f64")]
    pub step_crossing: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub composed_forward: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub composed_backward: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub return_forward: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub return_backward: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub return_map_forward: f64,
    #[serde(with = "crate::format::ext_f64")]
    pub return_map_backward: f64,
    /// Smallest relative gap between the vertical graphs of `R₁` and `R′`.
    pub nesting: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityCertificate {
    pub schema: u32,
    pub numeric_regime: String,
    pub good_point: GoodPointCertificate,
    pub bound_mode: BoundMode,
    /// `D` of the schedule and the nonlinearity bound used in `ε_n`.
    pub d: f64,
    pub d_nonlin: f64,
    pub c0: f64,
    pub c0_formula: String,
    pub options: CertifyOptions,
    pub m_attempts: Vec<MAttempt>,
    pub schedule: BoxSchedule,
    pub paper_schedule: BoxSchedule,
    pub paper_step_margins: Vec<AnalyticMargins>,
    pub steps: Vec<StepReport>,
    /// `R′ ⊂ U_0` and its image `G'(R′) ⊂ U_L`.
    pub concatenation: StripPair,
    pub return_map: ReturnReport,
    pub strip_r1: Strip,
    pub strip_r2: Strip,
    pub crossings: Vec<Crossing>,
    pub degree: i64,
    pub winding: WindingReport,
    pub newton: NewtonReport,
    pub fixed_point: Vec2,
    pub residual: f64,
    pub return_time: usize,
    pub period: usize,
    pub eigenvalues: Spectrum,
    pub eigenvalues_return: Spectrum,
    pub cone_margins: ConeMarginSummary,
}

/// Per-stage tables for a run that may have stopped early.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub stage: String,
    pub m_attempts: Vec<MAttempt>,
    pub steps: Vec<StepReport>,
    pub schedule: Option<BoxSchedule>,
    pub return_map: Option<ReturnReport>,
}

impl Diagnostics {
    /// Per-step margins as CSV rows; missing sampled legs are NaN.
    pub fn step_rows(&self) -> Vec<Vec<f64>> {
        self.steps
            .iter()
            .map(|s| {
                let sm = |f: fn(&SampledMargins) -> f64| s.sampled.as_ref().map_or(f64::NAN, f);
                vec![
                    s.n as f64,
                    s.analytic.kappa,
                    s.analytic.tau,
                    s.analytic.kappa_tilde,
                    sm(|m| m.forward),
                    sm(|m| m.backward),
                    sm(|m| m.crossing),
                ]
            })
            .collect()
    }

    pub const STEP_HEADER: [&'static str; 7] =
        ["n", "kappa_margin", "tau_margin", "kappa_tilde_margin", "sampled_forward", "sampled_backward", "crossing"];
}

/// Smallest return time `L` considered by the pipeline at rate `a`.
///
/// `U_L` is `c_L³ = 10⁶` times wider than `U_0`, so a vertical strip of `U_0`
/// can only cross `U_L` once `Σ λᵘ_n > 3 ln 100`; with `λᵘ ≳ 0.98 a` along a
/// good segment this also implies `c_L = 100` is reachable.
pub fn pipeline_min_return(a: f64) -> usize {
    (3.0 * 100f64.ln() / (0.98 * a)).ceil().max(1.0) as usize
}

/// Largest `M` whose `r̄ = D^{-3M}` is representable.
pub fn max_geometric_m(d: f64) -> u32 {
    ((-GEOMETRIC_LN_FLOOR) / (3.0 * d.ln())).floor().max(1.0) as u32
}

fn schedule_params(map: &PlanarMap, gp: &GoodPointCertificate, c0: f64, m: u32) -> ScheduleParams {
    ScheduleParams { a: gp.a, d: map.d1_bound.max(map.d2_bound), d_nonlin: map.d2_bound, m, c0 }
}

fn all_steps(chain: &FrameChain, s: &BoxSchedule, mode: ConeMode, grid: usize) -> Result<Vec<StepReport>> {
    (0..s.len()).into_par_iter().map(|n| cone_step_check(chain, s, n, mode, grid)).collect()
}

fn strip_limits_composed(kb: f64) -> StripLimits {
    StripLimits { vertical: kb, horizontal: kb / 100.0, forward: (kb, kb / 100.0), backward: (100.0 * kb, kb) }
}

fn strip_limits_return(kb: f64) -> StripLimits {
    StripLimits { vertical: kb, horizontal: kb / 2.0, forward: (kb, kb / 2.0), backward: (2.0 * kb, kb) }
}

fn pair_cones(p: &StripPair, step: usize, what: &str) -> Result<()> {
    let m = p.forward_cone_margin.min(p.backward_cone_margin);
    if m > 0.0 {
        Ok(())
    } else {
        Err(Error::ConeCheckFailed { step, which: what.into(), margin: m })
    }
}

/// `R₁`'s vertical graphs must sit strictly inside `R′`.
fn nesting_margin(outer: &Strip, inner: &Strip) -> f64 {
    let vk = StripKind::Vertical;
    let [ol, or] = &outer.graphs;
    let [il, ir] = &inner.graphs;
    let width = outer.parent.r;
    let mut m = f64::INFINITY;
    for p in il.points.iter().chain(&ir.points) {
        let w = p.y;
        m = m.min((il.value(vk, w) - ol.value(vk, w)) / width).min((or.value(vk, w) - ir.value(vk, w)) / width);
    }
    m
}

/// Full pipeline with per-stage diagnostics.
pub fn certify_with_diagnostics(
    map: &PlanarMap,
    gp: &GoodPointCertificate,
    opts: &CertifyOptions,
) -> (Result<HyperbolicityCertificate>, Diagnostics) {
    let mut diag = Diagnostics::default();
    let r = run(map, gp, opts, &mut diag);
    (r, diag)
}

pub fn certify(map: &PlanarMap, gp: &GoodPointCertificate, opts: &CertifyOptions) -> Result<HyperbolicityCertificate> {
    certify_with_diagnostics(map, gp, opts).0
}

fn run(map: &PlanarMap, gp: &GoodPointCertificate, opts: &CertifyOptions, diag: &mut Diagnostics) -> Result<HyperbolicityCertificate> {
    let stage = |diag: &mut Diagnostics, s: &str| diag.stage = s.to_string();
    stage(diag, "good-point");
    gp.verify_against_map(map).map_err(|e| e.at_stage("good-point"))?;
    let trace = &gp.trace;
    stage(diag, "frame");
    let chain = FrameChain::new(map, trace).map_err(|e| e.at_stage("frame"))?;
    let c0 = chart_constant(trace);
    let d = map.d1_bound.max(map.d2_bound);
    let m_max = opts.m_max.unwrap_or_else(|| max_geometric_m(d));
    let mode = if opts.sampled { ConeMode::Sampled } else { ConeMode::Analytic };

    stage(diag, "schedule");
    let mut chosen = None;
    let mut last_err = Error::InvalidParameter(format!("empty M range {}..={m_max}", opts.m_start));
    for m in opts.m_start..=m_max {
        let s = build_schedule(trace, &schedule_params(map, gp, c0, m)).map_err(|e| e.at_stage("schedule"))?;
        let outcome = s.check().map_err(|e| e.at_stage("schedule")).and_then(|_| {
            all_steps(&chain, &s, mode, opts.cone_grid).map_err(|e| e.at_stage("cone"))
        });
        match outcome {
            Ok(steps) => {
                diag.m_attempts.push(MAttempt { m, failure: None });
                chosen = Some((s, steps));
                break;
            }
            Err(e) => {
                diag.m_attempts.push(MAttempt { m, failure: Some(e.to_string()) });
                diag.schedule = Some(s);
                last_err = e;
            }
        }
    }
    let Some((schedule, steps)) = chosen else {
        return Err(last_err);
    };
    diag.schedule = Some(schedule.clone());
    diag.steps = steps.clone();

    let paper = build_schedule(trace, &schedule_params(map, gp, c0, opts.paper_m)).map_err(|e| e.at_stage("schedule"))?;
    if !(paper.identities_hold() && paper.terminal_identities_hold()) {
        return Err(Error::ScheduleCheckFailed(vec![format!("M = {} identities", opts.paper_m)]).at_stage("schedule"));
    }
    let paper_step_margins: Vec<_> =
        (0..paper.len()).map(|n| analytic_margins(&paper, trace.lambda_s[n], trace.lambda_u[n], n)).collect();

    let kb = schedule.kappa_bar.exp();
    let u0 = schedule.base_box();
    let ul = schedule.box_at(schedule.len());
    let budget = opts.refine_budget;

    stage(diag, "concatenation");
    let gp_f = |p: Vec2| chain.composed(p);
    let gp_df = |p: Vec2| chain.composed_jacobian(p);
    let rho0 = u0.r + u0.tau + u0.kappa * u0.r;
    let k2 = chain.second_derivative_bound(rho0);
    let composed = super::strips::MapPair { f: &gp_f, df: &gp_df, d2: k2 };
    let concatenation = build_strip_pair(&composed, &u0, &ul, &strip_limits_composed(kb), budget, "concatenation")
        .map_err(|e| e.at_stage("concatenation"))?;
    pair_cones(&concatenation, schedule.len(), "composed map cone").map_err(|e| e.at_stage("concatenation"))?;

    stage(diag, "return-map");
    let return_map = return_map_check(&chain, &schedule, opts.return_threshold_factor);
    diag.return_map = Some(crate::certifier::return_report(
        &chain.frames[0],
        &chain.frames[chain.len()],
        chain.closing(),
        &schedule,
        opts.return_threshold_factor,
    ));
    let return_map = return_map.map_err(|e| e.at_stage("return-map"))?;

    stage(diag, "return-strips");
    let g_f = |p: Vec2| chain.full(p);
    let g_df = |p: Vec2| chain.full_jacobian(p);
    let full = super::strips::MapPair { f: &g_f, df: &g_df, d2: chain.return_jacobian().norm() * k2 };
    let pair = build_strip_pair(&full, &u0, &u0, &strip_limits_return(kb), budget, "return-strips")
        .map_err(|e| e.at_stage("return-strips"))?;
    pair_cones(&pair, 0, "return map cone").map_err(|e| e.at_stage("return-strips"))?;
    let nesting = nesting_margin(&concatenation.vertical, &pair.vertical);
    if !(nesting > 0.0) {
        return Err(Error::StripConstructionFailed { stage: "return-strips".into(), reason: "R1 not inside R'".into() }
            .at_stage("return-strips"));
    }

    stage(diag, "hyperbolic");
    let h = verify_hyperbolic_like(&chain, &pair.vertical, &pair.horizontal, budget).map_err(|e| e.at_stage("hyperbolic"))?;
    stage(diag, "done");

    let fold = |f: &dyn Fn(&StepReport) -> f64| steps.iter().map(f).fold(f64::INFINITY, f64::min);
    let cone_margins = ConeMarginSummary {
        step_kappa: fold(&|s| s.analytic.kappa),
        step_tau: fold(&|s| s.analytic.tau),
        step_kappa_tilde: fold(&|s| s.analytic.kappa_tilde),
        sampled_forward: fold(&|s| s.sampled.map_or(f64::INFINITY, |m| m.forward)),
        sampled_backward: fold(&|s| s.sampled.map_or(f64::INFINITY, |m| m.backward)),
        step_crossing: fold(&|s| s.sampled.map_or(f64::INFINITY, |m| m.crossing)),
        composed_forward: concatenation.forward_cone_margin,
        composed_backward: concatenation.backward_cone_margin,
        return_forward: pair.forward_cone_margin,
        return_backward: pair.backward_cone_margin,
        return_map_forward: return_map.forward_cone_margin,
        return_map_backward: return_map.backward_cone_margin,
        nesting,
    };
    Ok(HyperbolicityCertificate {
        schema: crate::SCHEMA_VERSION,
        numeric_regime: NUMERIC_REGIME.into(),
        good_point: gp.clone(),
        bound_mode: map.bound_mode,
        d,
        d_nonlin: map.d2_bound,
        c0,
        c0_formula: C0_FORMULA.into(),
        options: *opts,
        m_attempts: diag.m_attempts.clone(),
        schedule,
        paper_schedule: paper,
        paper_step_margins,
        steps,
        concatenation,
        return_map,
        strip_r1: pair.vertical,
        strip_r2: pair.horizontal,
        crossings: h.crossings,
        degree: h.winding.degree,
        winding: h.winding,
        newton: h.newton,
        fixed_point: h.fixed_point,
        residual: h.residual,
        return_time: h.return_time,
        period: h.period,
        eigenvalues: h.eigenvalues,
        eigenvalues_return: h.eigenvalues_return,
        cone_margins,
    })
}

/// Tolerance for recomputed residuals and eigenvalues in [`HyperbolicityCertificate::verify`].
pub const VERIFY_TOL: f64 = 1e-8;

fn spectrum_gap(a: &Spectrum, b: &Spectrum) -> f64 {
    let (a0, a1) = a.moduli();
    let (b0, b1) = b.moduli();
    ((a0 - b0).abs() / a0.max(1.0)).max((a1 - b1).abs())
}

impl HyperbolicityCertificate {
    /// Re-run the verification legs from the stored data: the good point,
    /// the schedule, the degree on the stored `R₁` boundary and the closing
    /// residual and spectra at the stored point.
    pub fn verify(&self) -> Result<()> {
        if self.schema != crate::SCHEMA_VERSION {
            return Err(Error::InvalidParameter(format!("schema {} != {}", self.schema, crate::SCHEMA_VERSION)));
        }
        let map = self.good_point.map.build()?;
        self.good_point.verify_against_map(&map).map_err(|e| e.at_stage("good-point"))?;
        let trace = &self.good_point.trace;
        let fail = |what: String| Err(Error::ScheduleCheckFailed(vec![what]).at_stage("schedule"));
        let c0 = chart_constant(trace);
        if c0 != self.c0 {
            return fail(format!("C0 recomputed as {c0}, stored {}", self.c0));
        }
        let expect = schedule_params(&map, &self.good_point, c0, self.schedule.params.m);
        if expect != self.schedule.params {
            return fail("schedule parameters do not match the map".into());
        }
        if build_schedule(trace, &self.schedule.params)? != self.schedule {
            return fail("schedule does not rebuild identically".into());
        }
        self.schedule.check().map_err(|e| e.at_stage("schedule"))?;
        if build_schedule(trace, &self.paper_schedule.params)? != self.paper_schedule
            || !(self.paper_schedule.identities_hold() && self.paper_schedule.terminal_identities_hold())
        {
            return fail(format!("M = {} schedule does not rebuild identically", self.paper_schedule.params.m));
        }

        let chain = FrameChain::new(&map, trace).map_err(|e| e.at_stage("frame"))?;
        let w = fixed_point_degree(&chain, &self.strip_r1, self.options.refine_budget).map_err(|e| e.at_stage("hyperbolic"))?;
        if w.degree != self.degree || w.degree == 0 {
            return Err(Error::DegreeZero.at_stage("hyperbolic"));
        }

        let z = self.fixed_point;
        let residual = closing_residual(&map, z, self.return_time);
        if !(residual < NEWTON_TOL.max(VERIFY_TOL)) || (residual - self.residual).abs() > VERIFY_TOL {
            return Err(Error::NewtonDiverged { iterations: 0, residual }.at_stage("hyperbolic"));
        }
        if !self.return_time.is_multiple_of(self.period) {
            return Err(Error::InvalidParameter("period does not divide the return time".into()));
        }
        let ev = iterate_with_jacobian(&map, z, self.period).1.spectrum();
        let evl = iterate_with_jacobian(&map, z, self.return_time).1.spectrum();
        if spectrum_gap(&ev, &self.eigenvalues) > VERIFY_TOL
            || spectrum_gap(&evl, &self.eigenvalues_return) > VERIFY_TOL
            || !ev.is_hyperbolic()
        {
            return Err(Error::NonHyperbolicSpectrum(format!("recomputed {ev:?}, stored {:?}", self.eigenvalues)));
        }
        Ok(())
    }
}
