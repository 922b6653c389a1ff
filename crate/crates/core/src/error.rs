use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("bad code {code} in column `{column}` at row {row}")]
    BadCode { row: usize, column: String, code: String },
    #[error("malformed row {row}: expected {expected} cells, found {found}")]
    MalformedRow { row: usize, expected: usize, found: usize },
    #[error("non-numeric value `{value}` in column `{column}` at row {row}")]
    NumericParse { row: usize, column: String, value: String },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("sample size {size} exceeds row count {rows}")]
    SampleTooLarge { size: usize, rows: usize },
    #[error("column `{0}` is not categorical")]
    NotCategorical(String),
    #[error("column `{0}` is not numeric")]
    NotNumeric(String),
    #[error("invalid contingency table: {0}")]
    InvalidTable(String),
    #[error("contingency table is empty")]
    EmptyTable,
    #[error("degenerate margins: {0}")]
    DegenerateMargins(String),
    #[error("pooled proportion is {0}; the standard error is zero")]
    DegeneratePool(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("k = {k} outside [1, {n}]")]
    KOutOfRange { k: usize, n: usize },
    #[error("missing data in column `{0}`")]
    MissingData(String),
    #[error("no numeric and no categorical columns")]
    NoNumericAndNoCategorical,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("perplexity {perplexity} must be below n - 1 = {limit}")]
    PerplexityTooLarge { perplexity: f64, limit: f64 },
    #[error("{0} points exceed the exact t-SNE limit of 5000")]
    TooManyPoints(usize),
    #[error("column `{0}` is constant")]
    ConstantColumn(String),
    #[error("need at least {needed} rows, found {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("labels contain a single class")]
    SingleClass,
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("cost increases at k = {0}")]
    NonMonotoneCost(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
