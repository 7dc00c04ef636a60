use thiserror::Error;

/// Everything that can go wrong across the crate. Variants are grouped
/// roughly by phase: ingestion, argument validation, then numeric failures
/// (a computation that ran but produced nothing usable).
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("target column '{0}' not found in header")]
    MissingTarget(String),
    #[error("column '{0}' not found in header")]
    UnknownColumn(String),
    #[error("feature '{0}' not present in the dataset")]
    UnknownFeature(String),
    #[error("data row {row}, column '{col}': cannot parse '{value}' as a number")]
    BadCell {
        row: usize,
        col: String,
        value: String,
    },
    #[error("data row {row}, column '{col}': missing value")]
    MissingValue { row: usize, col: String },
    #[error("no data rows")]
    EmptyData,
    #[error("{0}")]
    InvalidArg(String),

    #[error("feature {0} is categorical, expected numeric")]
    NotNumeric(usize),
    #[error("feature {0} is numeric, expected categorical")]
    NotCategorical(usize),
    #[error("feature {0} is constant; nothing to estimate")]
    ConstantColumn(usize),
    #[error("response is constant; scores are undefined")]
    ConstantResponse,
    #[error("all feature scores are zero; nothing to normalize")]
    NoSignal,
    #[error("design matrix is rank deficient (pivot {pivot:.3e} under threshold {threshold:.3e})")]
    RankDeficient { pivot: f64, threshold: f64 },
    #[error("t-scores need n > p + 1 rows: n={n}, p={p}")]
    TooFewRows { n: usize, p: usize },
    #[error("unknown ranking method '{0}'")]
    UnknownMethod(String),
}

pub type Result<T> = std::result::Result<T, Error>;
