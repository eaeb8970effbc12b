use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the selection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("table has no usable rows")]
    EmptyTable,

    #[error("table has {rows} usable rows; at least {needed} are required")]
    TooFewRows { rows: usize, needed: usize },

    #[error("duplicate column header `{0}`")]
    DuplicateHeader(String),

    #[error("column `{column}` mixes numeric and non-numeric values (row {row}: `{value}`)")]
    MixedTypesInColumn {
        column: String,
        row: usize,
        value: String,
    },

    #[error("column `{column}`, row {row}: cannot parse `{value}` as a finite real")]
    Parse {
        column: String,
        row: usize,
        value: String,
    },

    #[error("column `{column}`: level `{level}` is not declared in the schema")]
    UnknownLevel { column: String, level: String },

    #[error("schema names column `{0}` which is not in the data")]
    SchemaColumnMissing(String),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("variable `{name}` must be {expected}")]
    WrongKind { name: String, expected: &'static str },

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },

    #[error("column `{0}` is constant")]
    ConstantColumn(String),

    #[error("design matrix is rank deficient; offending column `{0}`")]
    RankDeficient(String),

    #[error("fold of size {size} is too small for {params} parameters")]
    FoldTooSmall { size: usize, params: usize },

    #[error("path-step {0} has a single variable; its entropy coefficient is undefined")]
    SingletonPathStep(usize),

    #[error("target `{0}` has no neighbours in the forest")]
    IsolatedTarget(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{step}: {source}")]
    AtStep {
        step: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wrap an error with the pipeline step that raised it.
    pub fn at_step(self, step: &'static str) -> Self {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }

    /// The innermost error, looking through [`Error::AtStep`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
