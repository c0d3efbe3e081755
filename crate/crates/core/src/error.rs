use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative mass {mass} at cell {index}")]
    NegativeMass { index: usize, mass: String },

    #[error("masses sum to {sum}, expected exactly 1")]
    MassSumNotOne { sum: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("element {0} repeated in index set")]
    RepeatedElement(i64),

    #[error("letter {0} is not mapped to any cell")]
    UnmappedLetter(usize),

    #[error("window length {got} below minimum {min}")]
    WindowTooSmall { got: usize, min: usize },

    #[error("dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("T^{power} is not settled on the whole set (unsettled measure {unsettled})")]
    NotSettled { power: i64, unsettled: String },

    #[error("construction cap exceeded: {0}")]
    CapExceeded(String),

    #[error("sets overlap: {0}")]
    Overlap(String),

    #[error("set has zero measure")]
    ZeroMeasure,

    #[error("scheme does not match tower: {0}")]
    SchemeMismatch(String),

    #[error("unknown experiment kind `{0}`")]
    UnknownKind(String),

    #[error("config parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name, used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NegativeMass { .. } => "negative_mass",
            Error::MassSumNotOne { .. } => "mass_sum_not_one",
            Error::Empty(_) => "empty",
            Error::RepeatedElement(_) => "repeated_element",
            Error::UnmappedLetter(_) => "unmapped_letter",
            Error::WindowTooSmall { .. } => "window_too_small",
            Error::DimensionCap { .. } => "dimension_cap",
            Error::NotSettled { .. } => "not_settled",
            Error::CapExceeded(_) => "cap_exceeded",
            Error::Overlap(_) => "overlap",
            Error::ZeroMeasure => "zero_measure",
            Error::SchemeMismatch(_) => "scheme_mismatch",
            Error::UnknownKind(_) => "unknown_kind",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
