use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("{0}")]
    Run(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Io(_) => 3,
            HarnessError::Run(_) => 1,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        match e.kind() {
            csv::ErrorKind::Io(_) => HarnessError::Io(e.to_string()),
            _ => HarnessError::Run(format!("csv: {e}")),
        }
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Run(format!("json: {e}"))
    }
}

impl From<nr_cba_core::Error> for HarnessError {
    fn from(e: nr_cba_core::Error) -> Self {
        match e {
            nr_cba_core::Error::InvalidConfig(_) | nr_cba_core::Error::UnknownKind(_) => {
                HarnessError::Config(e.to_string())
            }
            other => HarnessError::Run(other.to_string()),
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
