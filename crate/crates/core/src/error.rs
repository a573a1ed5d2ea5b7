use thiserror::Error;

/// Errors produced by grid construction, signal handling, and the numeric pipelines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("singular jet: {0}")]
    SingularJet(String),
    #[error("derivative order cap exceeded: {0}")]
    OrderCap(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("series diverges: {0}")]
    DivergentSeries(String),
    #[error("incompatible target: {0}")]
    IncompatibleTarget(String),
    #[error("insufficient support: {0}")]
    InsufficientSupport(String),
    #[error("stability violated: {0}")]
    Stability(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("csv parse error at line {line}: {msg}")]
    CsvParse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
