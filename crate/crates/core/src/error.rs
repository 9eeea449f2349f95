use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("degenerate spectral measure: support does not span R^{dim} (Gram determinant ratio {ratio:.3e})")]
    Degenerate { dim: usize, ratio: f64 },
    #[error("potential kernel not defined: {0}")]
    NotDefined(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("point {0:?} outside the tabulated extent")]
    OutOfRange(Vec<f64>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
