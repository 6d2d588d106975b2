use std::path::PathBuf;

/// Errors raised anywhere in the toolbox.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid interpolant: {0}")]
    InvalidInterpolant(String),

    #[error("blow-up or unstable dt at t = {time}: {detail}")]
    BlowUp { time: f64, detail: String },

    #[error(
        "spin-up exceeded t_max = {t_max} without entering the absorbing ball \
         (last |grad u| = {last_h1}, bound {bound})"
    )]
    SpinUpTimeout { t_max: f64, last_h1: f64, bound: f64 },

    #[error("time grid: {0}")]
    TimeGrid(String),

    #[error("insufficient span: {0}")]
    InsufficientSpan(String),

    #[error("no admissible beta: {0}")]
    NoAdmissibleBeta(String),

    #[error("transport: {0}")]
    Transport(String),

    #[error("ensemble member {index}: {source}")]
    Member {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error("unsupported snapshot version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidInterpolant(_) => "invalid_interpolant",
            Error::BlowUp { .. } => "blow_up",
            Error::SpinUpTimeout { .. } => "spin_up_timeout",
            Error::TimeGrid(_) => "time_grid",
            Error::InsufficientSpan(_) => "insufficient_span",
            Error::NoAdmissibleBeta(_) => "no_admissible_beta",
            Error::Transport(_) => "transport",
            Error::Member { .. } => "member",
            Error::Format(_) => "format",
            Error::Version { .. } => "version",
            Error::Io { .. } => "io",
            Error::Config { .. } => "config",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn member(index: usize, source: Error) -> Self {
        Error::Member {
            index,
            source: Box::new(source),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
