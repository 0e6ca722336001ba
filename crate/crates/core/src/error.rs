use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping of errors, used by front-ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("structural error at line {line}: {message}")]
    Structural { line: u64, message: String },

    #[error("cannot parse {value:?} as a real number at row {row}, column {col}")]
    Parse { row: usize, col: usize, value: String },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} mismatch: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("row {row} has zero standard deviation")]
    ZeroStdRow { row: usize },

    #[error("column {column} has zero variance and cannot be scaled")]
    ZeroVarianceColumn { column: usize },

    #[error("weighted variance undefined: sum of weights equals one")]
    UndefinedVariance,

    #[error("standard deviation undefined: fewer than two non-zero weights ({nonzero})")]
    StdUndefined { nonzero: usize },

    #[error("value {value} at row {row}, column {col} is outside the domain of the logarithm")]
    Domain { row: usize, col: usize, value: f64 },

    #[error("degenerate component {component}: rank of the data is exhausted")]
    DegenerateComponent { component: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("class {class} has no members; recall is undefined")]
    UndefinedRecall { class: usize },

    #[error("malformed {what} file: {message}")]
    Format { what: &'static str, message: String },

    #[error("calibration parameters may not be estimated on the test partition")]
    TestLeakage,
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            InvalidArgument(_) | TestLeakage => ErrorCategory::Usage,
            Io { .. }
            | Structural { .. }
            | Parse { .. }
            | NonFinite { .. }
            | DimensionMismatch { .. }
            | Domain { .. }
            | Format { .. }
            | UndefinedRecall { .. } => ErrorCategory::Data,
            ZeroStdRow { .. }
            | ZeroVarianceColumn { .. }
            | UndefinedVariance
            | StdUndefined { .. }
            | DegenerateComponent { .. }
            | DegenerateFit(_) => ErrorCategory::Numeric,
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            Io { .. } => "io",
            Structural { .. } => "structural",
            Parse { .. } => "parse",
            NonFinite { .. } => "non_finite",
            InvalidArgument(_) => "invalid_argument",
            DimensionMismatch { .. } => "dimension_mismatch",
            ZeroStdRow { .. } => "zero_std_row",
            ZeroVarianceColumn { .. } => "zero_variance_column",
            UndefinedVariance => "undefined_variance",
            StdUndefined { .. } => "std_undefined",
            Domain { .. } => "domain",
            DegenerateComponent { .. } => "degenerate_component",
            DegenerateFit(_) => "degenerate_fit",
            UndefinedRecall { .. } => "undefined_recall",
            Format { .. } => "format",
            TestLeakage => "test_leakage",
        }
    }
}
