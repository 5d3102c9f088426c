use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bessel order/argument outside operating envelope (|n| <= 64, 0 <= x <= 100): n={n}, x={x}")]
    BesselDomain { n: i32, x: f64 },

    #[error("degenerate frequency: |J_{order}({arg})| <= {floor:e} and regularization is disabled")]
    DegenerateFrequency { order: i32, arg: f64, floor: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("signal too short: {len} samples, need at least {min}")]
    TooShortSignal { len: usize, min: usize },

    #[error("window/hop configuration does not overlap-add to a positive envelope")]
    NonCola,

    #[error("non-finite value in input tensor")]
    NonFiniteInput,

    #[error("compression exponent must lie in (0, 1], got {0}")]
    InvalidExponent(f64),

    #[error("desired signal has zero energy, SNR scaling is undefined")]
    ZeroEnergyDesired,

    #[error("filter/geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that indicate invalid inputs or configuration, as
    /// opposed to numeric or runtime failures. The CLI maps the former to
    /// exit code 2 and the latter to 3.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::BesselDomain { .. }
                | Error::ShapeMismatch(_)
                | Error::TooShortSignal { .. }
                | Error::NonCola
                | Error::NonFiniteInput
                | Error::InvalidExponent(_)
                | Error::GeometryMismatch(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
