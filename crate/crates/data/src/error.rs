use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("validation error: missing field `{0}`")]
    Missing(String),
    #[error("validation error: unknown field `{0}`")]
    Unknown(String),
    #[error("validation error: field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("range error: {dimension} score {score} outside [{lo}, {hi}]")]
    Range { dimension: String, score: f64, lo: f64, hi: f64 },
    #[error("input error: {0}")]
    Input(String),
    #[error("{path}:{line}: {source}")]
    Line {
        path: String,
        line: usize,
        #[source]
        source: Box<DataError>,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl DataError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), source }
    }
}

pub type Result<T> = std::result::Result<T, DataError>;
