use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// The parent relation of a causal graph contains a directed cycle.
    #[error("causal graph has a cycle through type `{0}`")]
    CyclicGraph(String),

    /// A parent reference names a type that was never declared.
    #[error("unknown type `{parent}` referenced as a parent of `{child}`")]
    UnknownType { child: String, parent: String },

    /// No node type is currently valid; generation cannot proceed.
    #[error("no valid node type remains (generated {generated} nodes)")]
    EmptyMask { generated: usize },

    /// A node index lies outside the graph.
    #[error("node index {index} out of range (node count {count})")]
    IndexOutOfRange { index: usize, count: usize },

    /// Graph dimensions disagree with the flow parameters.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Sampling temperature must be strictly positive.
    #[error("non-positive temperature {0}")]
    NonPositiveTemperature(f64),

    /// A sample record is missing steps required by the operation.
    #[error("incomplete sample record: {0}")]
    IncompleteRecord(String),

    /// A conditioning prefix violates the causal graph.
    #[error("invalid condition: {0}")]
    InvalidCondition(String),

    /// An update was requested with no rollouts.
    #[error("empty batch")]
    EmptyBatch,

    /// A decoded object does not fit the road layout (strict mode only).
    #[error("object {id} decodes outside the road layout at ({x:.2}, {y:.2})")]
    UnplaceableObject { id: usize, x: f64, y: f64 },

    /// A required checkpoint file is absent.
    #[error("missing checkpoint: {0}")]
    MissingCheckpoint(String),

    /// A temperature sweep needs at least two temperatures.
    #[error("temperature sweep needs at least 2 temperatures, got {0}")]
    TooFewTemperatures(usize),

    /// An evaluation was requested over zero scenarios.
    #[error("empty evaluation set")]
    EmptyEvaluationSet,

    /// Unsupported render format.
    #[error("unknown format `{0}`")]
    UnknownFormat(String),

    /// Malformed configuration or input file.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
