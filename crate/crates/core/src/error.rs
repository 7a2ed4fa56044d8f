use thiserror::Error;

/// Crate-wide error type. Variants are grouped by the process exit code they
/// map to: configuration (2), model evaluation (3), numerical failure (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    #[error("basis cardinality {cardinality} exceeds cap {cap}")]
    SizeOverflow { cardinality: u128, cap: u128 },

    #[error("integer overflow computing {0}")]
    ArithmeticOverflow(String),

    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: String,
    },

    #[error("correlation matrix is not positive definite")]
    NotPositiveDefiniteCorrelation,

    #[error("moment matrix is not positive definite (Cholesky failed after jitter up to {max_jitter:e})")]
    NotPositiveDefinite { max_jitter: f64 },

    #[error("non-finite moment estimate for monomial pair ({i}, {j})")]
    NonFiniteMoment { i: usize, j: usize },

    #[error("design matrix is rank deficient: numerical rank {rank} < {columns} columns")]
    RankDeficient { rank: usize, columns: usize },

    #[error("insufficient tail: need L*(1-beta) >= 1, got L={samples}, beta={beta}")]
    InsufficientTail { samples: usize, beta: f64 },

    #[error("probability weights sum to {sum}, expected 1 within 1e-9")]
    WeightSum { sum: f64 },

    #[error("benchmark CVaR is zero; mean relative difference is undefined")]
    ZeroBenchmark,

    #[error("low-fidelity output is near constant (variance {variance:e}); raise the surrogate degree or interaction order")]
    DegenerateLowFidelity { variance: f64 },

    #[error("Sobol dimension {requested} exceeds the {supported}-dimension direction-number table")]
    SobolDimension { requested: usize, supported: usize },

    #[error("singular stiffness matrix: unstable mechanism or non-positive area")]
    SingularStiffness,

    #[error("model evaluation failed: {0}")]
    Model(String),

    #[error("model returned a non-finite value at sample {sample}: {value}")]
    NonFiniteModelOutput { sample: usize, value: f64 },

    #[error("external model produced {actual} output lines, expected {expected}")]
    CountMismatch { expected: usize, actual: usize },

    #[error("external model output line {line} is not a number: {content:?}")]
    MalformedOutput { line: usize, content: String },

    #[error("external model exited with code {code:?}; stderr: {stderr}")]
    ExternalExit { code: Option<i32>, stderr: String },

    #[error("external model timed out after {seconds} s")]
    ExternalTimeout { seconds: f64 },

    #[error("failed to spawn external model {command:?}: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },

    #[error("bi-fidelity step {step:?} failed: {source}")]
    AlgorithmStep {
        step: &'static str,
        source: Box<Error>,
    },

    #[error("archive format error: {0}")]
    Archive(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Attach a bi-fidelity pipeline step name to the failure.
    pub fn at_step(self, step: &'static str) -> Self {
        Error::AlgorithmStep {
            step,
            source: Box::new(self),
        }
    }

    /// Process exit code category: 2 config, 3 model evaluation, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AlgorithmStep { source, .. } => source.exit_code(),
            Error::Config(_)
            | Error::InvalidArgument(_)
            | Error::Archive(_)
            | Error::Json(_)
            | Error::Io { .. } => 2,
            Error::Model(_)
            | Error::NonFiniteModelOutput { .. }
            | Error::CountMismatch { .. }
            | Error::MalformedOutput { .. }
            | Error::ExternalExit { .. }
            | Error::ExternalTimeout { .. }
            | Error::Spawn { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
