use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The caller violated a precondition (dimension mismatch, bad grid, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A formula was evaluated outside its domain (pole, negative time, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The integrator could not make progress.
    #[error("numerical failure at t = {time} ns: {reason}")]
    Numerical { time: f64, reason: String },

    /// The Liouvillian has more than one stationary state.
    #[error("steady state is not unique: null space has dimension {null_dim}")]
    AmbiguousSteadyState { null_dim: usize },

    /// A scenario or config file failed schema validation.
    #[error("config error at line {line}: {field}: {message}")]
    Config {
        line: usize,
        field: String,
        message: String,
    },

    /// Input data could not be parsed.
    #[error("data error at row {row}: {message}")]
    Data { row: usize, message: String },

    /// An inner simulation failed while evaluating one scan point.
    #[error("scan point {index} ({coords}): {source}")]
    ScanPoint {
        index: usize,
        coords: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(line: usize, field: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config {
            line,
            field: field.into(),
            message: msg.into(),
        }
    }

    /// True when the root cause is an integrator or linear-algebra failure.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical { .. } | Error::AmbiguousSteadyState { .. } => true,
            Error::ScanPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
