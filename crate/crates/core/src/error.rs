use thiserror::Error;

/// Errors surfaced by evaluators, samplers and quadrature routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation received a parameter outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation was called outside its stated precondition. The message
    /// names the inequality that failed.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A series did not converge within the iteration cap.
    #[error("series did not converge within {max_terms} terms ({context})")]
    SeriesDivergence { max_terms: usize, context: &'static str },

    /// Adaptive or fixed-order quadrature failed to reach its tolerance.
    #[error("quadrature failure: {0}")]
    Quadrature(String),

    /// The monomial Gram matrix could not be factorized.
    #[error("gram matrix numerically singular (condition estimate {cond:.3e})")]
    SingularGram { cond: f64 },

    /// A finite-difference stencil disagreed with its refinement beyond
    /// tolerance, i.e. the step is too large for the requested accuracy.
    #[error("finite-difference step too large: Richardson disagreement {disagreement:.3e} at h = {h:.3e}")]
    StepTooLarge { h: f64, disagreement: f64 },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit status the CLI maps this error to: validation problems exit 2,
    /// numerical failures exit 3.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::Precondition(_) => 2,
            _ => 3,
        }
    }
}
