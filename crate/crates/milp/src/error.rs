use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate row name `{0}`")]
    DuplicateRow(String),
    #[error("invalid bounds for `{name}`: [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("row `{row}` references unknown variable index {index}")]
    UnknownVariable { row: String, index: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("MPS line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("names `{first}` and `{second}` collide after sanitizing")]
    NameCollision { first: String, second: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("model has {found} free binary variables, above the reference solver limit of {limit}")]
    TooLarge { found: usize, limit: usize },
    #[error("solution file line {line}: {message}")]
    MalformedSolution { line: usize, message: String },
    #[error("external solver failed: {0}")]
    External(String),
    #[error("solution contains non-finite value for `{0}`")]
    NonFinite(String),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
