use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] cospectra::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Serialize)]
pub struct ErrorPayload {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub exit_code: i32,
}

impl CliError {
    pub fn io(path: impl std::fmt::Display, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }

    /// 2: configuration, 3: resource cap, 4: non-convergence, 1: anything else.
    pub fn exit_code(&self) -> i32 {
        use cospectra::Error as E;
        match self {
            CliError::Config { .. } => 2,
            CliError::Core(E::Parse { .. } | E::Parameter(_)) => 2,
            CliError::Core(E::ResourceLimit { .. }) => 3,
            CliError::Core(E::NonConvergence { .. }) => 4,
            _ => 1,
        }
    }

    pub fn payload(&self) -> ErrorPayload {
        use cospectra::Error as E;
        let (error, line) = match self {
            CliError::Config { line, .. } => ("config", (*line > 0).then_some(*line)),
            CliError::Io { .. } => ("io", None),
            CliError::Core(e) => match e {
                E::ResourceLimit { .. } => ("resource-limit", None),
                E::Parameter(_) => ("parameter", None),
                E::EmptyResult => ("empty-result", None),
                E::Undecidable(_) => ("undecidable", None),
                E::Truncation(_) => ("truncation", None),
                E::NonConvergence { .. } => ("non-convergence", None),
                E::Reversibility { .. } => ("reversibility", None),
                E::DivisionByZero { .. } => ("division-by-zero", None),
                E::Parse { line, .. } => ("parse", Some(*line)),
                E::BracketLost { .. } => ("bracket-lost", None),
                E::ZeroConnectivity => ("zero-connectivity", None),
            },
        };
        ErrorPayload {
            error,
            message: self.to_string(),
            line,
            exit_code: self.exit_code(),
        }
    }
}
