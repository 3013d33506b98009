use thiserror::Error;

/// Failure modes shared by every module of the library.
#[derive(Debug, Error)]
pub enum BiltsError {
    #[error("relative rotation angle {angle} is within tolerance of pi; logarithm is ill-conditioned")]
    RotationNearPi { angle: f64 },

    #[error("screw axis undefined for a pure translation (|omega| = {norm})")]
    PureTranslation { norm: f64 },

    #[error("total progress {total} is below the degeneracy threshold")]
    DegenerateProgress { total: f64 },

    #[error("singular decomposition (r11 = {r11}, r22 = {r22}); enable regularization to proceed")]
    SingularDecomposition { r11: f64, r22: f64 },

    #[error("invariants undefined (r11 = {r11}, r22 = {r22})")]
    SingularInvariants { r11: f64, r22: f64 },

    #[error("index {index} out of range for a valid range of {start}..{end}")]
    IndexOutOfRange { index: usize, start: usize, end: usize },

    #[error("descriptor scales differ: (m = {m1}, ds = {ds1}) vs (m = {m2}, ds = {ds2})")]
    MismatchedScale { m1: usize, ds1: f64, m2: usize, ds2: f64 },

    #[error("sequence too short: need at least {needed}, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error in {file} at line {line}: {message}")]
    Parse { file: String, line: u64, message: String },

    #[error("schema error in {file}: {message}")]
    Schema { file: String, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl BiltsError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        BiltsError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        BiltsError::InvalidArgument(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, BiltsError>;
