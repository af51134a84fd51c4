use thiserror::Error;

/// Command failures, grouped by exit code.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Bad corpus, plan or log contents.
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Analysis(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    /// A replay did not reproduce its log.
    #[error("{0}")]
    Mismatch(String),
}

impl Failure {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Failure::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 is left to argument parsing.
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 3,
            Failure::Data(_) => 4,
            Failure::Analysis(_) => 5,
            Failure::Io { .. } => 6,
            Failure::Mismatch(_) => 7,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config",
            Failure::Data(_) => "data",
            Failure::Analysis(_) => "analysis",
            Failure::Io { .. } => "io",
            Failure::Mismatch(_) => "mismatch",
        }
    }
}
