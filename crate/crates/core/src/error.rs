use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid contested space: {0}")]
    InvalidContestedSpace(String),
    #[error("point {index} at ({x:.3}, {y:.3}) is {offset:.3} m from the path (tolerance {tolerance} m)")]
    Projection {
        index: usize,
        x: f64,
        y: f64,
        offset: f64,
        tolerance: f64,
    },
    #[error("degenerate observation window: {0}")]
    DegenerateWindow(String),
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid sample {id}: {reason}")]
    InvalidSample { id: String, reason: String },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("metric undefined: {0}")]
    MetricUndefined(String),
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("{file}:{row}: {rule}")]
    Schema {
        file: String,
        row: usize,
        rule: String,
    },
    #[error("not enough samples: {0}")]
    NotEnoughSamples(String),
    #[error("logistic regression did not converge after {iterations} iterations (gradient norm {grad_norm:e}); objective trace: {trace:?}")]
    NotConverged {
        iterations: usize,
        grad_norm: f64,
        trace: Vec<f64>,
    },
    #[error("missing ground truth for sample {0}")]
    MissingTruth(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
