#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("size must be at least {min}, got {got}")]
    InvalidSize { min: usize, got: usize },
    #[error("element {element} out of range for n = {n}")]
    OutOfRange { element: usize, n: usize },
    #[error("transposition endpoints must differ, got element {0} twice")]
    DegenerateTransposition(usize),
    #[error("self-loop at {0} is not allowed")]
    SelfLoop(usize),
    #[error("dynamics exhausted: only a single cycle remains")]
    ExhaustedDynamics,
    #[error("stale effect: label {0} is not in the registry")]
    StaleEffect(usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
