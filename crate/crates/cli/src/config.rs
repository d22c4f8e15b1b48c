//! Experiment configuration: the TOML schema accepted by `growthgap run`
//! and echoed into every summary.

use growthgap::arithmetic::ClassificationThresholds;
use growthgap::maps::{GridSpec, MapSpec};
use growthgap::pipeline::{AChoice, PipelineOptions};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    pub run: Operation,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub budget: Budget,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// JSON summary; stdout when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    /// CSV series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Primary artifact (certificate).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Per-stage certifier diagnostics as CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "operation", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Operation {
    Arith(ArithParams),
    Growth(GrowthParams),
    GrowthGap(GrowthGapParams),
    Goodpoint(GoodpointParams),
    Certify(PipelineOptions),
    VerifyCert(VerifyParams),
    Displacement(DisplacementParams),
    FreeDisc(FreeDiscParams),
    Kac(KacParams),
    Holder(HolderParams),
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Arith(_) => "arith",
            Operation::Growth(_) => "growth",
            Operation::GrowthGap(_) => "growth-gap",
            Operation::Goodpoint(_) => "goodpoint",
            Operation::Certify(_) => "certify",
            Operation::VerifyCert(_) => "verify-cert",
            Operation::Displacement(_) => "displacement",
            Operation::FreeDisc(_) => "free-disc",
            Operation::Kac(_) => "kac",
            Operation::Holder(_) => "holder",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArithParams {
    pub alpha: String,
    pub depth: usize,
    /// Expand as far as the representation allows, up to `depth`.
    #[serde(default)]
    pub available: bool,
    #[serde(default = "default_h", rename = "H")]
    pub h: f64,
    #[serde(default = "default_max_terms")]
    pub max_terms: usize,
    #[serde(default)]
    pub thresholds: ClassificationThresholds,
}

fn default_h() -> f64 {
    2.0
}

fn default_max_terms() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthParams {
    pub n_list: Vec<usize>,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthGapParams {
    pub q_sequence: Vec<u64>,
    pub theta: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(default)]
    pub strict: bool,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_true")]
    pub run_pipeline: bool,
    #[serde(default)]
    pub pipeline: PipelineOptions,
}

fn default_grid() -> usize {
    17
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodpointParams {
    pub q: usize,
    pub a: AChoice,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_halton")]
    pub halton: usize,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_radius: Option<f64>,
    /// Smallest return time; the certify pipeline's rule when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_return: Option<usize>,
}

fn default_halton() -> usize {
    64
}

fn default_seeds() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyParams {
    pub certificate: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementParams {
    pub eps: f64,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeDiscParams {
    pub eps: f64,
    pub trials: u64,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KacParams {
    pub center: [f64; 2],
    pub radius: f64,
    pub samples: u64,
    pub horizon: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderParams {
    pub alpha: String,
    pub holder_exponent: f64,
    pub holder_constant: f64,
    pub j_list: Vec<usize>,
    pub grid: GridSpec,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }
}
