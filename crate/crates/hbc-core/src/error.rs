use std::path::PathBuf;

use thiserror::Error;

use crate::network::NodeId;

pub type Result<T, E = HbcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HbcError {
    /// An input violated an operation precondition.
    #[error("domain error: {quantity} = {value:e} ({constraint})")]
    Domain {
        quantity: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A closed form hit a vanishing denominator.
    #[error("degenerate scenario: {0}")]
    Degenerate(String),

    #[error("singular nodal system: node {node} has no path to the rest of the network")]
    Singular { node: NodeId },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("{quantity} = {value:e} outside [{min:e}, {max:e}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("resonance peak lies on the sweep boundary at {frequency_hz:e} Hz; widen the grid")]
    BoundaryPeak { frequency_hz: f64 },

    #[error("sweep has no distinguishable peak")]
    FlatSweep,

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("invalid table: {0}")]
    InvalidTable(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("sweep step {step}: {source}")]
    SweepStep {
        step: usize,
        #[source]
        source: Box<HbcError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(String),
}

impl HbcError {
    pub(crate) fn domain(quantity: &'static str, value: f64, constraint: &'static str) -> Self {
        HbcError::Domain {
            quantity,
            value,
            constraint,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HbcError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by user-supplied input files rather than numerics.
    pub fn is_config_error(&self) -> bool {
        match self {
            HbcError::Config(_)
            | HbcError::Io { .. }
            | HbcError::Csv(_)
            | HbcError::InvalidTable(_)
            | HbcError::InvalidProfile(_)
            | HbcError::InvalidSweep(_) => true,
            HbcError::SweepStep { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("missing parameter `{section}.{key}`")]
    Missing { section: String, key: String },

    #[error("line {line}: `{section}.{key}` is not a valid {expected}: {value:?}")]
    BadValue {
        section: String,
        key: String,
        line: usize,
        expected: &'static str,
        value: String,
    },

    #[error("line {line}: duplicate key `{section}.{key}`")]
    Duplicate {
        section: String,
        key: String,
        line: usize,
    },

    #[error("`{field}`: direct value {direct:e} disagrees with geometric value {derived:e}")]
    Inconsistent {
        field: String,
        direct: f64,
        derived: f64,
    },

    #[error("{0}")]
    Invalid(String),
}
