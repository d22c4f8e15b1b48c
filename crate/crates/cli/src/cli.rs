//! Command-line flags and their translation into an [`ExperimentConfig`].

use crate::config::*;
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use growthgap::arithmetic::{ClassificationThresholds, IrrationalSpec};
use growthgap::certifier::CertifyOptions;
use growthgap::maps::{GridSpec, MapSpec, TrigTable};
use growthgap::pipeline::{AChoice, PipelineOptions};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "growthgap", version, about = "Closing-lemma and rigidity experiments for area-preserving planar maps")]
pub struct Cli {
    /// Worker threads for the library (default: all cores).
    #[arg(long, global = true, env = "GROWTHGAP_THREADS")]
    pub threads: Option<usize>,
    /// Print the experiment as a TOML config (usable with `run --config`) and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Continued fractions, Brjuno sums, classification and the non-Brjuno subsequence.
    Arith(ArithArgs),
    /// Derivative growth over a grid, or the growth-gap scan with `--q-seq`.
    Scan(ScanArgs),
    /// Search for a (q, a)-good point.
    Goodpoint(GoodpointArgs),
    /// Full pipeline: seeds, good point, hyperbolicity certificate.
    Certify(CertifyArgs),
    /// Displacement, free-disc, Kac and Hölder experiments.
    Rigidity {
        #[command(subcommand)]
        op: RigidityCommand,
    },
    /// Re-verify a stored certificate.
    VerifyCert(VerifyArgs),
    /// Run an experiment described by a TOML config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum RigidityCommand {
    /// Largest displacement over the grid against the ball-diameter bound.
    Displacement(DisplacementArgs),
    /// Monte Carlo search for the largest disc with f(D) ∩ D = ∅.
    FreeDisc(FreeDiscArgs),
    /// First-return statistics of a disc.
    Kac(KacArgs),
    /// Table of the Hölder rigidity bound along the convergents.
    Holder(HolderArgs),
}

#[derive(Debug, Args, Default)]
pub struct MapArgs {
    /// Catalog map name.
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub rho0: Option<f64>,
    #[arg(long)]
    pub rho1: Option<f64>,
    #[arg(long)]
    pub amp: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub inner: Option<f64>,
    #[arg(long = "box")]
    pub box_half_width: Option<f64>,
    /// Extra parameter `name=value`; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Sine coefficients of a trig-twist kick.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sin: Vec<f64>,
    /// Cosine coefficients of a trig-twist kick.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub cos: Vec<f64>,
    /// Use the iterate `f^power`.
    #[arg(long, default_value_t = 1)]
    pub power: u64,
}

impl MapArgs {
    pub fn spec(&self) -> anyhow::Result<MapSpec> {
        let name = self.map.clone().context("--map is required")?;
        let mut params = BTreeMap::new();
        let named = [
            ("k", self.k),
            ("mu", self.mu),
            ("eps", self.eps),
            ("rho0", self.rho0),
            ("rho1", self.rho1),
            ("amp", self.amp),
            ("radius", self.radius),
            ("inner", self.inner),
            ("box", self.box_half_width),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                params.insert(k.to_string(), v);
            }
        }
        for p in &self.params {
            let (k, v) = p.split_once('=').with_context(|| format!("--param expects NAME=VALUE, got `{p}`"))?;
            let v: f64 = v.trim().parse().with_context(|| format!("--param {k}: not a number"))?;
            params.insert(k.trim().to_string(), v);
        }
        let coefficients = (!self.sin.is_empty() || !self.cos.is_empty()).then(|| TrigTable { sin: self.sin.clone(), cos: self.cos.clone() });
        Ok(MapSpec { name, params, coefficients, det_tol: None, power: self.power })
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// JSON summary path (stdout when absent).
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// CSV output path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_iterations: Option<u64>,
    #[arg(long)]
    pub max_wall_seconds: Option<f64>,
}

impl OutputArgs {
    fn config(&self, map: Option<MapSpec>, run: Operation) -> ExperimentConfig {
        ExperimentConfig {
            rng_seed: self.seed,
            map,
            run,
            outputs: Outputs { json: self.json.clone(), csv: self.csv.clone(), out: None, diagnostics: None },
            budget: Budget { max_iterations: self.max_iterations, max_wall_seconds: self.max_wall_seconds },
        }
    }
}

#[derive(Debug, Args)]
pub struct ArithArgs {
    /// `surd:s,c,r,den`, `liouville:N`, `series:e1,e2,…`, `dec:0.ddd` or `golden`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value_t = 30)]
    pub depth: usize,
    /// Stop where the representation runs out instead of failing.
    #[arg(long)]
    pub available: bool,
    #[arg(long = "H", default_value_t = 2.0)]
    pub h: f64,
    #[arg(long, default_value_t = 8)]
    pub max_terms: usize,
    #[arg(long)]
    pub super_liouville: Option<f64>,
    #[arg(long)]
    pub brjuno_divergence: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, default_value_t = 100_000)]
    pub q: usize,
    /// Growth rate `a`, or `auto`.
    #[arg(long, default_value = "auto")]
    pub a: String,
    /// Side of the seed grid.
    #[arg(long, default_value_t = 17)]
    pub grid: usize,
    #[arg(long, default_value_t = 64)]
    pub halton: usize,
    /// Seeds kept after ranking by growth.
    #[arg(long, default_value_t = 16)]
    pub seeds: usize,
    #[arg(long)]
    pub match_radius: Option<f64>,
    #[arg(long)]
    pub m_start: Option<u32>,
    #[arg(long)]
    pub m_max: Option<u32>,
}

impl PipelineArgs {
    fn options(&self) -> anyhow::Result<PipelineOptions> {
        let mut certify = CertifyOptions::default();
        if let Some(m) = self.m_start {
            certify.m_start = m;
        }
        if self.m_max.is_some() {
            certify.m_max = self.m_max;
        }
        Ok(PipelineOptions {
            q: self.q,
            a: AChoice::parse(&self.a)?,
            grid: self.grid,
            halton: self.halton,
            seeds: self.seeds,
            match_radius: self.match_radius,
            certify,
        })
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Horizons for the derivative-growth table.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Vec<usize>,
    /// Growth-gap sequence `q_0, q_1, …`; switches to the growth-gap scan.
    #[arg(long = "q-seq", value_delimiter = ',')]
    pub q_seq: Vec<u64>,
    #[arg(long, default_value_t = 0.9)]
    pub theta: f64,
    #[arg(long = "H", default_value_t = 2.0)]
    pub h: f64,
    /// Reject sequences that violate the growth rule.
    #[arg(long)]
    pub strict: bool,
    /// Stop after the scan without running the pipeline on a hit.
    #[arg(long)]
    pub no_pipeline: bool,
    #[arg(long = "scan-grid", default_value_t = 17)]
    pub scan_grid: usize,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct GoodpointArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long)]
    pub min_return: Option<usize>,
    /// Write the good-point certificate here.
    #[arg(long)]
    pub out_cert: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Write the hyperbolicity certificate here.
    #[arg(long = "out")]
    pub out_cert: Option<PathBuf>,
    /// Per-step certifier margins as CSV.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub certificate: PathBuf,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DisplacementArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Rotation number ε of the bound (defaults to the map's `eps`).
    #[arg(long)]
    pub rotation: Option<f64>,
    #[arg(long = "grid", default_value_t = 33)]
    pub grid_n: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FreeDiscArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long)]
    pub rotation: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1000)]
    pub horizon: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct KacArgs {
    #[command(flatten)]
    pub map: MapArgs,
    /// Disc center `x,y`.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub center: Vec<f64>,
    #[arg(long = "disc-radius")]
    pub disc_radius: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 100_000)]
    pub horizon: u64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct HolderArgs {
    #[command(flatten)]
    pub map: MapArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, default_value_t = 1.0)]
    pub holder_exponent: f64,
    #[arg(long, default_value_t = 1.0)]
    pub holder_constant: f64,
    #[arg(long, value_delimiter = ',')]
    pub j_list: Vec<usize>,
    #[arg(long = "grid", default_value_t = 17)]
    pub grid_n: usize,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn rotation_or_eps(rotation: Option<f64>, map: &MapSpec) -> anyhow::Result<f64> {
    rotation
        .or_else(|| map.params.get("eps").copied())
        .context("--rotation is required when the map has no `eps` parameter")
}

/// The experiment a command line describes; `run --config` reads it from disk.
pub fn to_config(cmd: &Command) -> anyhow::Result<ExperimentConfig> {
    Ok(match cmd {
        Command::Arith(a) => {
            let mut thresholds = ClassificationThresholds::default();
            if let Some(v) = a.super_liouville {
                thresholds.super_liouville = v;
            }
            if let Some(v) = a.brjuno_divergence {
                thresholds.brjuno_divergence = v;
            }
            let p = ArithParams { alpha: a.alpha.clone(), depth: a.depth, available: a.available, h: a.h, max_terms: a.max_terms, thresholds };
            a.out.config(None, Operation::Arith(p))
        }
        Command::Scan(s) => {
            let map = s.map.spec()?;
            let run = match (s.q_seq.is_empty(), s.n_list.is_empty()) {
                (false, true) => Operation::GrowthGap(GrowthGapParams {
                    q_sequence: s.q_seq.clone(),
                    theta: s.theta,
                    h: s.h,
                    strict: s.strict,
                    grid: s.scan_grid,
                    run_pipeline: !s.no_pipeline,
                    pipeline: s.pipeline.options()?,
                }),
                (true, false) => Operation::Growth(GrowthParams { n_list: s.n_list.clone(), grid: GridSpec::square(s.scan_grid) }),
                _ => bail!("scan needs exactly one of --n-list and --q-seq"),
            };
            s.out.config(Some(map), run)
        }
        Command::Goodpoint(g) => {
            let o = g.pipeline.options()?;
            let p = GoodpointParams {
                q: o.q,
                a: o.a,
                grid: o.grid,
                halton: o.halton,
                seeds: o.seeds,
                match_radius: o.match_radius,
                min_return: g.min_return,
            };
            let mut cfg = g.out.config(Some(g.map.spec()?), Operation::Goodpoint(p));
            cfg.outputs.out = g.out_cert.clone();
            cfg
        }
        Command::Certify(c) => {
            let mut cfg = c.out.config(Some(c.map.spec()?), Operation::Certify(c.pipeline.options()?));
            cfg.outputs.out = c.out_cert.clone();
            cfg.outputs.diagnostics = c.diagnostics.clone();
            cfg
        }
        Command::VerifyCert(v) => v.out.config(None, Operation::VerifyCert(VerifyParams { certificate: v.certificate.clone() })),
        Command::Rigidity { op } => match op {
            RigidityCommand::Displacement(d) => {
                let map = d.map.spec()?;
                let eps = rotation_or_eps(d.rotation, &map)?;
                d.out.config(Some(map), Operation::Displacement(DisplacementParams { eps, grid: GridSpec::square(d.grid_n) }))
            }
            RigidityCommand::FreeDisc(f) => {
                let map = f.map.spec()?;
                let eps = rotation_or_eps(f.rotation, &map)?;
                f.out.config(Some(map), Operation::FreeDisc(FreeDiscParams { eps, trials: f.trials, horizon: f.horizon }))
            }
            RigidityCommand::Kac(k) => {
                let [x, y] = k.center[..] else { bail!("--center expects x,y") };
                let center = [x, y];
                let p = KacParams { center, radius: k.disc_radius, samples: k.samples, horizon: k.horizon };
                k.out.config(Some(k.map.spec()?), Operation::Kac(p))
            }
            RigidityCommand::Holder(h) => {
                let p = HolderParams {
                    alpha: h.alpha.clone(),
                    holder_exponent: h.holder_exponent,
                    holder_constant: h.holder_constant,
                    j_list: h.j_list.clone(),
                    grid: GridSpec::square(h.grid_n),
                };
                let mut map = h.map.spec()?;
                if map.name == "rigid-rotation" && !map.params.contains_key("eps") {
                    let alpha: IrrationalSpec = h.alpha.parse()?;
                    map.params.insert("eps".into(), alpha.to_f64());
                }
                h.out.config(Some(map), Operation::Holder(p))
            }
        },
        Command::Run { config } => {
            let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
            ExperimentConfig::from_toml(&text).with_context(|| format!("parsing {}", config.display()))?
        }
    })
}
