use std::fmt;

/// A rejected scenario field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl Issue {
    pub fn new(path: &str, message: impl Into<String>) -> Self {
        Self { path: path.to_string(), message: message.into() }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid scenario:{}", .0.iter().map(|i| format!("\n  {i}")).collect::<String>())]
    Validation(Vec<Issue>),
    #[error("{0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Wraps a core error raised while computing `context`.
    pub fn from_core(context: &str, e: recoilslit::Error) -> Self {
        use recoilslit::Error as E;
        match e {
            E::Domain(m) | E::Parse(m) => CliError::Validation(vec![Issue::new(context, m)]),
            E::FitInvalid(m) => CliError::Numerical(format!("{context}: fit invalid: {m}")),
            E::Numerical { message, diagnostics } => {
                CliError::Numerical(format!("{context}: {message} ({diagnostics})"))
            }
            E::Io(err) => CliError::Io(format!("{context}: {err}")),
        }
    }
}
