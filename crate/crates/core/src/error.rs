use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("dominant eigenvalue is not simple (nearest competitor at distance {separation:e})")]
    Nondegeneracy { separation: f64 },
    #[error("ground state changes sign (most negative normalized entry {min_entry:e})")]
    Positivity { min_entry: f64 },
    #[error("initial measure gives zero survival mass")]
    DegenerateSupport,
    #[error("fit error: {0}")]
    Fit(String),
    #[error("classifier error: {0}")]
    Classifier(String),
    #[error("linear algebra failure: {0}")]
    Numerical(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
