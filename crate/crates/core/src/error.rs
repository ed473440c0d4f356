use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid quadrature/basis request: {0}")]
    InvalidBasis(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("material coefficient out of range: {0}")]
    InvalidMaterial(String),

    #[error("mass matrix of element {element} is not positive definite")]
    NotPositiveDefinite { element: usize },

    #[error("newton did not converge on element {element}: residual {residual:e} after {iterations} iterations")]
    NewtonDiverged {
        element: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("non-finite value detected in {what}")]
    NonFinite { what: String },

    #[error("step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn at_step(self, step: usize) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
