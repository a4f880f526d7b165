use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported Bessel order {0}: expected an integer or half-integer in [0, {max}]", max = crate::specfun::MAX_ORDER)]
    InvalidOrder(f64),

    #[error("negative argument t = {0}")]
    NegativeArgument(f64),

    #[error("argument t = {0} is beyond the supported range (t <= {max})", max = crate::specfun::MAX_ARGUMENT)]
    ArgumentTooLarge(f64),

    #[error("{0} is singular at t = {1}")]
    Singular(&'static str, f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("distance {t} lies outside the filtered range [{min}, {max}]")]
    OutsideFilterRange { t: f64, min: f64, max: f64 },

    #[error("radial range too short: data must cover r up to {required}, sinogram stops at {available}")]
    RadialRangeTooShort { required: f64, available: f64 },

    #[error("point {0:?} is a corner of the box")]
    CornerPoint([f64; 3]),

    #[error("point {0:?} is not on the box boundary")]
    OffBoundary([f64; 3]),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u8, expected: u8 },

    #[error("malformed file: {0}")]
    Format(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
