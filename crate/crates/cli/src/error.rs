use std::path::PathBuf;

use serde::Serialize;

/// Failure of a `run` or `gen` invocation, grouped by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Config does not parse or does not match the task schema.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    /// A value is well-formed but rejected by the model.
    #[error("{0}")]
    Invalid(String),

    /// An input data file is malformed.
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },

    /// The computation itself failed (no convergence, non-identifiable, …).
    #[error("{category}: {message}")]
    Numerical { category: &'static str, message: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    message: String,
}

impl CliError {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Schema { path: path.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for anything the config author can fix, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Invalid(_) | CliError::Data { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Schema { .. } => "schema",
            CliError::Invalid(_) => "invalid-value",
            CliError::Data { .. } => "data",
            CliError::Numerical { category, .. } => category,
            CliError::Io { .. } => "io",
        }
    }

    /// One-line JSON description for stderr.
    pub fn to_json(&self) -> String {
        let (path, message) = match self {
            CliError::Schema { path, message } => (Some(path.clone()), message.clone()),
            CliError::Data { path, message } => (Some(path.display().to_string()), message.clone()),
            CliError::Io { path, source } => (Some(path.display().to_string()), source.to_string()),
            CliError::Invalid(m) | CliError::Numerical { message: m, .. } => (None, m.clone()),
        };
        serde_json::to_string(&ErrorLine { error: self.category(), path, message })
            .expect("error line serialises")
    }
}

impl From<fluxkit::Error> for CliError {
    fn from(e: fluxkit::Error) -> Self {
        use fluxkit::Error as E;
        let message = e.to_string();
        match e {
            E::InvalidInput(_)
            | E::InvalidPopulation(_)
            | E::FieldExceedsCritical { .. }
            | E::AlreadyFieldScaled(_)
            | E::DegenerateGeometry(_) => CliError::Invalid(message),
            E::Csv(m) => CliError::Data { path: PathBuf::new(), message: m },
            E::NonIdentifiable(_) => CliError::Numerical { category: "non-identifiable", message },
            E::NonPhysical(_) => CliError::Numerical { category: "non-physical", message },
            E::NumericalFailure(_) => CliError::Numerical { category: "numerical", message },
        }
    }
}
