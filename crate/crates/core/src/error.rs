use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("requested index {requested} exceeds continued fraction depth {depth}")]
    DepthExceeded { requested: usize, depth: usize },
    #[error("insufficient depth: only {produced} subsequence terms fit in depth {depth}")]
    InsufficientDepth { produced: usize, depth: usize },
    #[error("invalid irrational spec: {0}")]
    InvalidIrrational(String),

    #[error("unknown map `{0}`")]
    UnknownMap(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("orbit left the domain at step {index} (point {point:?})")]
    DomainEscape { index: usize, point: [f64; 2] },

    #[error("degenerate spectrum: singular values {0:e} and {1:e} coincide")]
    DegenerateSpectrum(f64, f64),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("consequence violated: {0}")]
    ConsequenceViolated(String),
    #[error("cot recursion bound violated at step {step}: lhs {lhs:e} > rhs {rhs:e}")]
    BoundViolated { step: usize, lhs: f64, rhs: f64 },

    #[error("schedule checks failed: {}", .0.join("; "))]
    ScheduleCheckFailed(Vec<String>),
    #[error("degenerate frame at step {step}: |cot| = {cot:e}")]
    DegenerateFrame { step: usize, cot: f64 },
    #[error("cone check failed at step {step}: {which} (margin {margin:e})")]
    ConeCheckFailed { step: usize, which: String, margin: f64 },
    #[error("strip construction failed at {stage}: {reason}")]
    StripConstructionFailed { stage: String, reason: String },
    #[error("return map too far from identity: deviation {deviation:e} > threshold {threshold:e}")]
    ReturnMapTooFar { deviation: f64, threshold: f64 },
    #[error("degree of G - id along the strip boundary is zero")]
    DegreeZero,
    #[error("Newton diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("non-hyperbolic spectrum: {0:?}")]
    NonHyperbolicSpectrum(String),

    #[error("infeasible iteration count {0}")]
    InfeasibleIterationCount(u64),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub fn at_stage(self, stage: &str) -> Error {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }

    /// Innermost error, skipping stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
