use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("entry ({row}, {col}) is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("entries sum to {sum}, outside tolerance {tol} of one")]
    SumOutOfTolerance { sum: f64, tol: f64 },
    #[error("entry ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("invalid shape {rows}x{cols}: {reason}")]
    InvalidShape {
        rows: usize,
        cols: usize,
        reason: String,
    },
    #[error("shape {rows}x{cols} is too small for chart operations (need at least 2x2)")]
    ShapeTooSmall { rows: usize, cols: usize },
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("table has no observations")]
    EmptyTable,
    #[error("invalid mixture representation: {0}")]
    InvalidMixture(String),
    #[error("base columns {j1} and {j2} are linearly dependent")]
    DependentBaseColumns { j1: usize, j2: usize },
    #[error("column {col} is not a nonnegative combination of the base columns")]
    NotRepresentable { col: usize },
    #[error("matrix has numerical rank {rank}, above two")]
    RankTooHigh { rank: usize },
    #[error("matrix has rank one")]
    RankOne,
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("chart point lies outside its parameter domain")]
    OutOfDomain,
    #[error("matrix is not in the image of chart {chart}: {reason}")]
    NotInChartImage { chart: String, reason: String },
    #[error("the two weight expressions disagree: {left} vs {right}")]
    AlphaInconsistent { left: f64, right: f64 },
    #[error("chart point is not strictly interior")]
    NotInterior,
    #[error("objective is undefined (-inf) at the starting point")]
    ObjectiveUndefined,
    #[error("objective or gradient is not finite")]
    NonFinite,
    #[error("parameter dimension {dim} is too large for exhaustive search (max {max})")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("grid resolution {0} must lie in (0, 0.5]")]
    InvalidResolution(f64),
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable name of the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NegativeEntry { .. } => "NegativeEntry",
            Error::SumOutOfTolerance { .. } => "SumOutOfTolerance",
            Error::NonFiniteEntry { .. } => "NonFiniteEntry",
            Error::InvalidShape { .. } => "InvalidShape",
            Error::ShapeTooSmall { .. } => "ShapeTooSmall",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::EmptyTable => "EmptyTable",
            Error::InvalidMixture(_) => "InvalidMixture",
            Error::DependentBaseColumns { .. } => "DependentBaseColumns",
            Error::NotRepresentable { .. } => "NotRepresentable",
            Error::RankTooHigh { .. } => "RankTooHigh",
            Error::RankOne => "RankOne",
            Error::InvalidChart(_) => "InvalidChart",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::OutOfDomain => "OutOfDomain",
            Error::NotInChartImage { .. } => "NotInChartImage",
            Error::AlphaInconsistent { .. } => "AlphaInconsistent",
            Error::NotInterior => "NotInterior",
            Error::ObjectiveUndefined => "ObjectiveUndefined",
            Error::NonFinite => "NonFinite",
            Error::DimensionTooLarge { .. } => "DimensionTooLarge",
            Error::InvalidResolution(_) => "InvalidResolution",
            Error::InvalidSettings(_) => "InvalidSettings",
            Error::Parse(_) => "Parse",
            Error::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
