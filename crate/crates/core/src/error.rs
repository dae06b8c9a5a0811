use thiserror::Error;

/// Errors raised anywhere in the selection pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FkrfeError {
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("categorical level {0} has no observations")]
    EmptyLevel(usize),
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("need at least 1 feature column")]
    NoFeatures,

    #[error("slicing the response into {0} slices leaves an empty slice")]
    EmptySlice(usize),
    #[error("empty sample passed to the two-sample KS statistic")]
    EmptySample,

    #[error("empty sample set")]
    EmptySampleSet,
    #[error("row {0} is in-bag for every tree; increase the number of trees")]
    RowNeverOob(usize),
    #[error("tree {0} has no out-of-bag rows")]
    EmptyOob(usize),
    #[error("feature {0} is not active in this forest")]
    InactiveFeature(usize),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("truth set is empty; TPR is undefined")]
    EmptyTruth,
    #[error("every response value is zero; MAPE is undefined")]
    AllZeroResponse,

    #[error("non-numeric cell at data row {row}, column {col} ({name}): {value:?}")]
    NonNumericCell {
        row: usize,
        col: usize,
        name: String,
        value: String,
    },
    #[error("duplicate header {0:?}")]
    DuplicateHeader(String),
    #[error("empty file")]
    EmptyFile,
    #[error("response column {0:?} not found")]
    MissingColumn(String),
    #[error("csv error: {0}")]
    Csv(String),
    #[error("io error: {0}")]
    Io(String),
}

impl FkrfeError {
    /// Input and configuration problems, as opposed to failures at run time.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            FkrfeError::RowNeverOob(_)
                | FkrfeError::EmptyOob(_)
                | FkrfeError::EmptySampleSet
                | FkrfeError::EmptySample
                | FkrfeError::InactiveFeature(_)
                | FkrfeError::AllZeroResponse
                | FkrfeError::EmptyTruth
        )
    }
}

impl From<std::io::Error> for FkrfeError {
    fn from(e: std::io::Error) -> Self {
        FkrfeError::Io(e.to_string())
    }
}

impl From<csv::Error> for FkrfeError {
    fn from(e: csv::Error) -> Self {
        FkrfeError::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FkrfeError>;
