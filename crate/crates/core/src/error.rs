use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("design matrix is rank deficient: column `{column}` is collinear with {others:?}")]
    RankDeficient { column: String, others: Vec<String> },

    #[error("design matrix is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty dataset after filtering")]
    EmptyAfterFilter,

    #[error("sample `{0}` has zero library size")]
    ZeroLibrarySize(String),

    #[error("non-positive abundance {value} at (taxon {taxon}, sample {sample})")]
    NonPositive { taxon: usize, sample: usize, value: f64 },

    #[error("insufficient taxa for mode estimation (need at least 3, got {0})")]
    InsufficientTaxa(usize),

    #[error("all points are identical ({0}); spread is zero")]
    ZeroSpread(f64),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// Numeric failures map to a distinct exit status in the CLI.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Numeric(_) | Error::IllConditioned(_) | Error::NonPositive { .. }
        )
    }
}
