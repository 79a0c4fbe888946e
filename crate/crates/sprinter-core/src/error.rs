use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes of inputs do not line up (vector lengths, column counts).
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// Inputs are structurally valid but contain illegal values
    /// (non-finite entries, out-of-range parameters).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A value lies outside the mathematical domain of an operation
    /// (e.g. a binomial mean outside (0,1)).
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed data file: bad header, ragged rows, unparseable or
    /// non-finite cells.
    #[error("data error: {0}")]
    Data(String),
    /// The requested family does not match the response or model.
    #[error("family mismatch: {0}")]
    FamilyMismatch(String),
    /// An iterative routine failed to produce a usable answer.
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
