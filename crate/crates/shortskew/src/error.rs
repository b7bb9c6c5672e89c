use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("unsupported generator order {0} (maximum is 3)")]
    UnsupportedOrder(usize),

    #[error("price {price} outside no-arbitrage bounds [{lower}, {upper}]")]
    OutOfBounds { price: f64, lower: f64, upper: f64 },

    #[error("implied volatility did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("insufficient quotes: {0}")]
    InsufficientQuotes(String),

    #[error("missing 25-delta wing: {0}")]
    MissingWing(String),

    #[error("skew changes sign inside the regression window")]
    SignMix,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for malformed or unusable input data (as opposed to bad parameters).
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Schema(_)
                | Error::InsufficientQuotes(_)
                | Error::MissingWing(_)
                | Error::SignMix
                | Error::Io(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
