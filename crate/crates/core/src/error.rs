use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} variables, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("group too large: closure exceeded {cap} elements")]
    GroupTooLarge { cap: usize },

    #[error("unsupported group: {0}")]
    UnsupportedGroup(String),

    #[error("inconsistent irreducible representations: {0}")]
    InconsistentIrreps(String),

    #[error("basis extraction failed: {0}")]
    BasisExtraction(String),

    #[error("polynomial is not invariant: {0}")]
    NotInvariant(String),

    #[error("degree {degree} exceeds the supported bound {bound}")]
    Degree { degree: usize, bound: usize },

    #[error("relaxation order {order} is below the minimum order {min_order}")]
    Order { order: usize, min_order: usize },

    #[error("expansion residual {0:e} exceeds tolerance")]
    Expansion(f64),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
