use thiserror::Error;

/// Errors raised by the algebra, ladder, and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("block {block} is singular")]
    SingularBlock { block: usize },
    #[error("block {block} is ill-conditioned (rcond = {rcond:.3e})")]
    IllConditioned { block: usize, rcond: f64 },
    #[error("invalid trace weights: {0}")]
    InvalidTrace(String),
    #[error("rational value detected in continued fraction expansion at digit {0}")]
    RationalTheta(usize),
    #[error("integer overflow in convergent recurrence at index {0}")]
    Overflow(usize),
    #[error("dimension budget exceeded: {0}")]
    DimBudget(String),
    #[error("degenerate seminorm: kernel contains non-scalar elements")]
    DegenerateSeminorm,
    #[error("expectations are not nested: {0}")]
    NotNested(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code classification: 2 = usage/parse, 3 = numeric guard.
    pub fn is_numeric_guard(&self) -> bool {
        matches!(
            self,
            Error::SingularBlock { .. }
                | Error::IllConditioned { .. }
                | Error::RationalTheta(_)
                | Error::Overflow(_)
                | Error::DimBudget(_)
        )
    }
}
