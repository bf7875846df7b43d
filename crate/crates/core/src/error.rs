use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("field {field} T is at or above the critical field {critical} T")]
    FieldExceedsCritical { field: f64, critical: f64 },

    #[error("population {0} is not a thermal population (must lie in [0, 0.5))")]
    InvalidPopulation(f64),

    #[error("energies were already rescaled to {0} T; field scaling is absolute, rescale from zero-field energies")]
    AlreadyFieldScaled(f64),

    #[error("non-identifiable: {0}")]
    NonIdentifiable(String),

    #[error("non-physical: {0}")]
    NonPhysical(String),

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
