//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when building graphs, panels or models.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node {node} out of range for a graph with {n} nodes")]
    NodeOutOfRange { node: u32, n: usize },

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(u32, u32),

    #[error("self-loop ({node}, {node}) not allowed here")]
    SelfLoopNotAllowed { node: u32 },

    #[error("edge label {label} out of range for a graph with {k} edges")]
    EdgeLabelOutOfRange { label: u32, k: usize },

    #[error("graphs have {0} and {1} nodes; they must match")]
    NodeCountMismatch(usize, usize),

    #[error("panel has {rows} rows but the graph has {k} edges")]
    PanelShapeMismatch { rows: usize, k: usize },

    #[error("non-finite value at edge row {edge}, column {t}")]
    NonFinite { edge: usize, t: usize },

    #[error("series too short: {t} columns, need at least {min}")]
    SeriesTooShort { t: usize, min: usize },

    #[error("edge {0}->{1} has a constant differenced series and no scale")]
    DegenerateEdge(u32, u32),

    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    SingularDesign(Vec<String>),

    #[error("not enough observations: {n_obs} rows for {n_params} parameters")]
    TooFewObservations { n_obs: usize, n_params: usize },

    #[error("simulation produced a non-finite value at time index {t}")]
    SimulationOverflow { t: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("stage list has {stages} entries but max lag is {lag}")]
    StageListMismatch { stages: usize, lag: usize },

    #[error("model was fitted on a graph with {expected} edges, got a panel with {got} rows")]
    ModelPanelMismatch { expected: usize, got: usize },

    #[error("unknown regime '{0}'")]
    UnknownRegime(String),

    #[error("parse error in {path} at line {line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("sample too small for this statistic: {n} values")]
    SampleTooSmall { n: usize },

    #[error("series is constant; statistic undefined")]
    ConstantSeries,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable kind tag, used by the command line interface
    /// for its single-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NodeOutOfRange { .. } => "node-out-of-range",
            Error::DuplicateEdge(..) => "duplicate-edge",
            Error::SelfLoopNotAllowed { .. } => "self-loop",
            Error::EdgeLabelOutOfRange { .. } => "edge-label",
            Error::NodeCountMismatch(..) => "node-count-mismatch",
            Error::PanelShapeMismatch { .. } => "panel-shape",
            Error::NonFinite { .. } => "non-finite",
            Error::SeriesTooShort { .. } => "series-too-short",
            Error::DegenerateEdge(..) => "degenerate-edge",
            Error::SingularDesign(_) => "singular-design",
            Error::TooFewObservations { .. } => "too-few-observations",
            Error::SimulationOverflow { .. } => "overflow",
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::StageListMismatch { .. } => "stage-list",
            Error::ModelPanelMismatch { .. } => "model-panel-mismatch",
            Error::UnknownRegime(_) => "unknown-regime",
            Error::Parse { .. } => "parse",
            Error::SampleTooSmall { .. } => "sample-too-small",
            Error::ConstantSeries => "constant-series",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
