use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("division degeneracy: {0}")]
    Degenerate(String),

    #[error("cone violation: {0}")]
    ConeViolation(String),

    #[error("sampler exhausted for stratum `{stratum}` after {attempts} attempts")]
    SamplerExhausted { stratum: String, attempts: u64 },

    #[error("domain violation: u = {value} at node {node}")]
    DomainViolation { node: usize, value: f64 },

    #[error("symmetry violation at the axis: u'(0) = {0}")]
    SymmetryViolation(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("objective failed at kappa = {kappa:?}, xi = {xi:?}: {source}")]
    Objective {
        kappa: Vec<f64>,
        xi: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
