use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, found {found}")]
    ShapeMismatch { op: &'static str, expected: String, found: String },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("row {row} has norm {norm:e}, too small to normalize")]
    ZeroRow { row: usize, norm: f64 },

    #[error("matrix has zero Frobenius norm")]
    ZeroMatrix,

    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("no lambda satisfies the feasibility condition (c^2 - a*S^2 = {gap})")]
    Infeasible { gap: f64 },

    #[error("feasibility margin {margin} is not positive")]
    MarginNotPositive { margin: f64 },

    #[error("contraction base {base} is outside (0, 1)")]
    BaseOutOfRange { base: f64 },

    #[error("lambda = -1 makes the counterexample recurrence singular")]
    LambdaSingular,

    #[error("value {value} outside the domain of {op}")]
    DomainError { op: &'static str, value: f64 },

    #[error("closed-form state has a zero normalizer at step {step}")]
    DegenerateNorm { step: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("layer {layer}: {source}")]
    Layer {
        layer: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("malformed CSV: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl Into<String>, found: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            op,
            expected: expected.into(),
            found: found.into(),
        }
    }

    /// Strips any `Layer` wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Layer { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_overflow(&self) -> bool {
        matches!(self.root(), Error::NonFinite { .. })
    }
}
