use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad classes of failure, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration or arguments.
    Config,
    /// Malformed or unusable input data.
    Input,
    /// An estimator or formula left its numerical domain.
    Domain,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("k = {k} is out of range for a group of size n = {n} (need 1 <= k <= n - 1)")]
    KOutOfRange { k: usize, n: usize },

    #[error("order statistic {value} is not positive; log-based estimators need positive data")]
    NonPositive { value: f64 },

    #[error("degenerate tail sample: the top order statistics are all tied")]
    DegenerateSample,

    #[error("group {group}: {source}")]
    InGroup {
        group: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("combined Hill estimate {gamma} is not positive; c1 needs gamma > 0")]
    IndexNotPositive { gamma: f64 },

    #[error("log argument {value} <= 0 at time point j = {j}; try a larger k")]
    LogDomain { j: usize, value: f64 },

    #[error("no exceedances of the group-0 threshold at time point j = {j}; try a larger k")]
    NoExceedances { j: usize },

    #[error("{what} must be positive, got {value}")]
    NotPositive { what: &'static str, value: f64 },

    #[error("invalid group: {0}")]
    InvalidGroup(String),

    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("format error on line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("no year in {start}..={end} has fewer than {max_missing} missing days")]
    NoCompleteYears {
        start: i32,
        end: i32,
        max_missing: u32,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("block {j} has only {count} declustered values (need at least 2)")]
    DegenerateBlock { j: usize, count: usize },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::KOutOfRange { .. }
            | Error::InvalidDesign(_)
            | Error::Config(_) => ErrorKind::Config,
            Error::InvalidGroup(_)
            | Error::InvalidPanel(_)
            | Error::Parse { .. }
            | Error::Format { .. }
            | Error::NoCompleteYears { .. }
            | Error::DegenerateBlock { .. } => ErrorKind::Input,
            Error::InGroup { source, .. } => source.kind(),
            Error::NonPositive { .. }
            | Error::DegenerateSample
            | Error::IndexNotPositive { .. }
            | Error::LogDomain { .. }
            | Error::NoExceedances { .. }
            | Error::NotPositive { .. } => ErrorKind::Domain,
        }
    }

    pub(crate) fn in_group(self, group: usize) -> Self {
        Error::InGroup {
            group,
            source: Box::new(self),
        }
    }
}
