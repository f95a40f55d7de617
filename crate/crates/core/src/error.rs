use thiserror::Error;

/// Errors raised by the estimators, the risk pipeline and the I/O layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("degenerate sample: need at least {required} observations, got {actual}")]
    DegenerateSample { required: usize, actual: usize },

    #[error("invalid column pair ({0}, {1})")]
    InvalidPair(usize, usize),

    #[error("column index {index} out of range for {p} columns")]
    ColumnOutOfRange { index: usize, p: usize },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("averaging count {n} for block ({k1}, {k2}) outside [1, {max}]")]
    InvalidN { k1: usize, k2: usize, n: usize, max: usize },

    #[error("missing quantity {0} required by the variance formula")]
    MissingQuantity(&'static str),

    #[error("no sample has a non-zero kernel weight at the conditioning point")]
    NoLocalData,

    #[error("all kernel weight sits on one observation (s_n = 1)")]
    DegenerateWeights,

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("value {0} outside [-1, 1]")]
    OutOfRange(f64),

    #[error("block sizes must be at least 2 (got {b1}, {b2})")]
    InvalidBlockSize { b1: usize, b2: usize },

    #[error("number of groups must be at least 2 (got {0})")]
    InvalidK(usize),

    #[error("correlation repair failed: {0}")]
    NotRepairable(String),

    #[error("density generator integrates to {integral}, expected 1")]
    NonNormalizedGenerator { integral: f64 },

    #[error("invalid density generator: {0}")]
    InvalidGenerator(String),

    #[error("quantile equation could not be bracketed: {0}")]
    BracketingFailure(String),

    #[error("portfolio variance is not positive ({0})")]
    SingularPortfolio(f64),

    #[error("covariance matrix is singular")]
    SingularCovariance,

    #[error("bandwidth is degenerate (zero spread)")]
    DegenerateBandwidth,

    #[error("empty series")]
    EmptySeries,

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("no rows left after filtering non-finite values")]
    EmptyAfterFiltering,

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::DegenerateSample { .. } => "DegenerateSample",
            Error::InvalidPair(..) => "InvalidPair",
            Error::ColumnOutOfRange { .. } => "ColumnOutOfRange",
            Error::NonFinite { .. } => "NonFinite",
            Error::InvalidPartition(_) => "InvalidPartition",
            Error::InvalidN { .. } => "InvalidN",
            Error::MissingQuantity(_) => "MissingQuantity",
            Error::NoLocalData => "NoLocalData",
            Error::DegenerateWeights => "DegenerateWeights",
            Error::InvalidKernel(_) => "InvalidKernel",
            Error::OutOfRange(_) => "OutOfRange",
            Error::InvalidBlockSize { .. } => "InvalidBlockSize",
            Error::InvalidK(_) => "InvalidK",
            Error::NotRepairable(_) => "NotRepairable",
            Error::NonNormalizedGenerator { .. } => "NonNormalizedGenerator",
            Error::InvalidGenerator(_) => "InvalidGenerator",
            Error::BracketingFailure(_) => "BracketingFailure",
            Error::SingularPortfolio(_) => "SingularPortfolio",
            Error::SingularCovariance => "SingularCovariance",
            Error::DegenerateBandwidth => "DegenerateBandwidth",
            Error::EmptySeries => "EmptySeries",
            Error::NotPositiveDefinite => "NotPositiveDefinite",
            Error::Config(_) => "ConfigError",
            Error::Parse { .. } => "ParseError",
            Error::EmptyAfterFiltering => "EmptyAfterFiltering",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
