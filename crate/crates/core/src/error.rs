use thiserror::Error;

/// Every failure surfaced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("infeasible point: {0}")]
    InfeasiblePoint(String),
    #[error("point is not in the set")]
    PointNotInSet,
    #[error("set is empty")]
    EmptySet,
    #[error("no multiplier: Λ(y, y*) is empty")]
    NoMultiplier,
    #[error("direction is not in the critical cone")]
    DirectionNotCritical,
    #[error("linear program is unbounded")]
    LpUnbounded,
    #[error("prerequisite failed: {0}")]
    PrerequisiteFailed(String),
    #[error("problem has no objective F")]
    MissingObjective,
    #[error("base point is not on the graph: {0}")]
    BaseNotOnGraph(String),
    #[error("direction is not in the linearized cone")]
    DirectionNotInLinCone,
    #[error("enumeration limit exceeded: {0}")]
    LimitExceeded(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, col, msg: msg.into() }
    }

    /// Stable upper-case code used in JSON reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DIMENSION_MISMATCH",
            Error::Parse { .. } => "PARSE_ERROR",
            Error::UnknownVariable(_) => "UNKNOWN_VARIABLE",
            Error::InfeasiblePoint(_) => "INFEASIBLE_POINT",
            Error::PointNotInSet => "POINT_NOT_IN_SET",
            Error::EmptySet => "EMPTY_SET",
            Error::NoMultiplier => "NO_MULTIPLIER",
            Error::DirectionNotCritical => "DIRECTION_NOT_CRITICAL",
            Error::LpUnbounded => "LP_UNBOUNDED",
            Error::PrerequisiteFailed(_) => "PREREQUISITE_FAILED",
            Error::MissingObjective => "MISSING_OBJECTIVE",
            Error::BaseNotOnGraph(_) => "BASE_NOT_ON_GRAPH",
            Error::DirectionNotInLinCone => "DIRECTION_NOT_IN_LIN_CONE",
            Error::LimitExceeded(_) => "LIMIT_EXCEEDED",
            Error::Io(_) => "IO_ERROR",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
