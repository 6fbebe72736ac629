use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] aloha_sic::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("figure config: {0}")]
    Toml(#[from] toml::de::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// The reader went away, as with `aloha-lab ... | head`.
    pub fn is_broken_pipe(&self) -> bool {
        let kind = match self {
            CliError::Io(e) => Some(e.kind()),
            CliError::Csv(e) => match e.kind() {
                csv::ErrorKind::Io(e) => Some(e.kind()),
                _ => None,
            },
            CliError::Json(e) => e.io_error_kind(),
            _ => None,
        };
        kind == Some(std::io::ErrorKind::BrokenPipe)
    }

    /// 2 for anything the caller got wrong, 3 when the closed forms refuse
    /// the request, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        use aloha_sic::Error as E;
        match self {
            CliError::Core(e) if e.is_analytic_range() => 3,
            CliError::Core(E::Domain(_) | E::InvalidConfig(_) | E::UnknownReceiver(_)) => 2,
            CliError::Usage(_) | CliError::Toml(_) => 2,
            _ => 1,
        }
    }
}
