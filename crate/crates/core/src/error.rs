use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x:.3}, {y:.3}) is {distance:.3} m from the route (limit {limit:.1} m)")]
    OffRoute {
        x: f64,
        y: f64,
        distance: f64,
        limit: f64,
    },

    #[error("invalid route: {0}")]
    InvalidRoute(String),

    #[error("invalid configuration `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("configuration parse error: {0}")]
    ConfigParse(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("reliability {0} outside [0, 1]")]
    ReliabilityOutOfRange(f64),

    #[error("contingency table has an empty margin; the test is undefined")]
    DegenerateTable,

    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("malformed table: {0}")]
    MalformedTable(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
