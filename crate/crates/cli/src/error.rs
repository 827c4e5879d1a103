use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: velojump::Error,
    },
    #[error("output: {0}")]
    Output(String),
}

/// Machine-readable failure record written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub schema: &'static str,
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
}

impl CliError {
    pub fn numerical(context: impl Into<String>) -> impl FnOnce(velojump::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Numerical { context, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Output(_) => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            schema: "error/1",
            kind: match self {
                CliError::Config(_) => "config",
                CliError::Numerical { .. } => "numerical",
                CliError::Output(_) => "output",
            },
            exit_code: self.exit_code(),
            message: self.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}
