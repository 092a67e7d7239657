use thiserror::Error;

/// Errors raised by the jet kernel, the models and the catalog.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// API misuse: mismatched truncation orders, missing jet blocks, bad indices.
    #[error("usage error: {0}")]
    Usage(String),

    /// Division by a series whose constant term vanishes, or a similar
    /// singularity of the expansion point.
    #[error("singular point: {0}")]
    SingularPoint(String),

    #[error("degenerate metric (|det g| = {det:e})")]
    DegenerateMetric { det: f64 },

    #[error("metric is not Lorentzian (-,+,+,+): {0}")]
    NotLorentzian(String),

    /// A numeric domain violation (sqrt/ln of a nonpositive constant term,
    /// sample point outside the domain, too many skipped points).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("exponent must be an integer constant (at byte {offset})")]
    NonIntegerExponent { offset: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors that come from the numerics at a particular sample
    /// point rather than from a malformed request.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::SingularPoint(_) | Error::DegenerateMetric { .. } | Error::NotLorentzian(_) | Error::Domain(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
