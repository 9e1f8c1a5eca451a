use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tail table query at t = {t} is outside [{lo}, {hi}]")]
    OutOfTable { t: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix flags violated: {0}")]
    Flags(String),

    #[error("unsupported model for this operation: {0}")]
    Unsupported(String),

    #[error("size cap exceeded: {0}")]
    SizeCap(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::OutOfTable { .. } => "out_of_table",
            Error::Quadrature(_) => "quadrature",
            Error::Dimension(_) => "dimension",
            Error::Flags(_) => "flags",
            Error::Unsupported(_) => "unsupported",
            Error::SizeCap(_) => "size_cap",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
