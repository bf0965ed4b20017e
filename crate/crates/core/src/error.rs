use thiserror::Error;

/// Errors raised by grid construction, field validation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field has {found} nodes, grid has {expected}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("unsupported Sobolev order {0} (supported: 0..=3)")]
    UnsupportedOrder(usize),

    #[error("non-positive speed sample {value} at index {index}")]
    NonPositiveSpeed { index: usize, value: f64 },

    #[error("time step violates the stability bound: courant number {courant:.6} exceeds 1")]
    Stability { courant: f64 },

    #[error("solution diverged (non-finite value) at step {step}")]
    Divergence { step: usize },

    #[error("solution blew up at step {step}: |u| = {magnitude:e} exceeds {threshold:e}")]
    BlowUp {
        step: usize,
        magnitude: f64,
        threshold: f64,
    },

    #[error("data incompatible with the Dirichlet condition: {0}")]
    IncompatibleData(String),

    #[error("component {index}: {source}")]
    Component {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips component wrappers and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Component { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn in_component(self, index: usize) -> Error {
        Error::Component {
            index,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
