//! Error classes and their exit codes.

use std::fmt;
use std::process::ExitCode;

use ustm::channel::ChannelError;
use ustm::fastdec::FastDecError;
use ustm::metrics::MetricsError;
use ustm::search::SearchError;
use ustm::structures::StructureError;
use ustm::ucon::UconError;

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable inputs, unsupported combinations.
    Usage(String),
    /// Input data violating a constellation invariant.
    Validation(String),
    /// A numerical routine failed to converge or hit a singular matrix.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Usage(_) => 2,
            Self::Validation(_) => 3,
            Self::Numerical(_) => 4,
        })
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::Validation(m) => write!(f, "validation error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<UconError> for Failure {
    fn from(e: UconError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<MetricsError> for Failure {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::QuadratureFailed { .. } | MetricsError::Linalg(_) => Self::Numerical(e.to_string()),
            MetricsError::NoReceiveAntennas | MetricsError::BadSnr(_) => Self::Usage(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<StructureError> for Failure {
    fn from(e: StructureError) -> Self {
        match e {
            StructureError::Metrics(m) => m.into(),
            StructureError::Linalg(_) => Self::Numerical(e.to_string()),
            StructureError::UnknownCatalog(_) | StructureError::Unsupported(_) => Self::Usage(e.to_string()),
            _ => Self::Validation(e.to_string()),
        }
    }
}

impl From<SearchError> for Failure {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Config(m) => Self::Usage(m),
            SearchError::Structure(s) => s.into(),
            SearchError::Metrics(m) => m.into(),
        }
    }
}

impl From<FastDecError> for Failure {
    fn from(e: FastDecError) -> Self {
        match e {
            FastDecError::Unsupported(_) | FastDecError::Shape { .. } => Self::Usage(e.to_string()),
            FastDecError::Structure(s) => s.into(),
            FastDecError::Linalg(_) => Self::Numerical(e.to_string()),
        }
    }
}

impl From<ChannelError> for Failure {
    fn from(e: ChannelError) -> Self {
        match e {
            ChannelError::Config(m) => Self::Usage(m),
            ChannelError::DecoderMismatch(m) => Self::Validation(m),
            ChannelError::FastDec(f) => f.into(),
            ChannelError::Linalg(_) => Self::Numerical(e.to_string()),
        }
    }
}
