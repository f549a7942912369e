use std::path::PathBuf;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] argqual_core::Error),
    #[error("{0}")]
    Usage(String),
    /// A required column is absent from a data file header.
    #[error("{path}: missing column {column:?}")]
    Schema { path: PathBuf, column: String },
    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{0}; check the endpoint and API key, then retry")]
    Provider(String),
    #[error("no cached completion for key {0}; rerun with a live provider to record it")]
    CacheMiss(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable category.
    pub fn category(&self) -> &'static str {
        use argqual_core::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Value(_) => "value",
                E::Config(_) => "config",
                E::Data(_) => "data",
                E::Dimension { .. } => "dimension",
                E::Coverage { .. } => "coverage",
                E::NonFiniteLoss { .. } => "numeric",
                E::Encoder(_) => "encoder",
            },
            CliError::Usage(_) => "usage",
            CliError::Schema { .. } => "schema",
            CliError::Parse { .. } => "parse",
            CliError::Provider(_) => "provider",
            CliError::CacheMiss(_) => "cache-miss",
            CliError::Io { .. } => "io",
            CliError::Json(_) => "parse",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "usage" => 2,
            "config" | "dimension" => 3,
            "value" | "data" | "coverage" | "schema" | "parse" => 4,
            "provider" | "encoder" => 5,
            "cache-miss" => 6,
            "io" => 7,
            _ => 8,
        }
    }

    /// `error[<category>]: <message>` on one line.
    pub fn one_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {msg}", self.category())
    }
}
