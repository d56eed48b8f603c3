use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input layout mismatch: expected {expected}, got {got}")]
    InputLayout { expected: String, got: String },
    #[error("model error: {0}")]
    Model(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("dataset is empty")]
    DatasetEmpty,
    #[error("contradictory dataset: identical input appears with labels {0} and {1}")]
    Contradiction(String, String),
    #[error("training failure at {stage} stage: {detail}")]
    TrainingFailure { stage: String, detail: String },
    #[error("degenerate neuron: all weights are zero")]
    DegenerateNeuron,
    #[error("condensation error: program disagrees with network on input {0}")]
    Condensation(String),
    #[error("interpretation error: {0}")]
    Interpretation(String),
    #[error("truth table too large: {vars} variables exceeds limit {limit}")]
    TableTooLarge { vars: usize, limit: usize },
    #[error("IR validation error: {0}")]
    IrValidation(String),
    #[error("programs are not generalizable: {0}")]
    NonGeneralizable(String),
    #[error("constant site {site} has no exact affine fit over sizes")]
    NonLinearConstant { site: String },
    #[error("need at least 3 sizes to generalize, got {0}")]
    NeedThreeSizes(usize),
    #[error("unknown task: {0}")]
    UnknownTask(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("solver error: {0}")]
    Solver(String),
}

impl Error {
    /// Stable machine-readable code, used by the CLI error JSON.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InputLayout { .. } => "input-layout",
            Error::Model(_) => "model",
            Error::Dimension(_) => "dimension-mismatch",
            Error::DatasetEmpty => "dataset-empty",
            Error::Contradiction(_, _) => "contradiction",
            Error::TrainingFailure { .. } => "training-failure",
            Error::DegenerateNeuron => "degenerate-neuron",
            Error::Condensation(_) => "condensation",
            Error::Interpretation(_) => "interpretation",
            Error::TableTooLarge { .. } => "table-too-large",
            Error::IrValidation(_) => "ir-validation",
            Error::NonGeneralizable(_) => "non-generalizable",
            Error::NonLinearConstant { .. } => "non-linear-constant",
            Error::NeedThreeSizes(_) => "needs-3-sizes",
            Error::UnknownTask(_) => "unknown-task",
            Error::Io(_) => "io",
            Error::Serde(_) => "serde",
            Error::Solver(_) => "solver",
        }
    }
}
