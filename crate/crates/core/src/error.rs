use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("step called on a finished episode; call reset first")]
    EpisodeFinished,
    #[error("step called before the first reset")]
    NotReset,
    #[error("action has {got} components, environment expects {expected}")]
    ActionDim { expected: usize, got: usize },
    #[error("action component {index} = {value} is outside [-1, 1]")]
    ActionRange { index: usize, value: f64 },
    #[error("unknown environment `{0}`")]
    UnknownEnv(String),
    #[error("unknown formulation `{0}`")]
    UnknownFormulation(String),
    #[error("invalid episode segments: {0}")]
    InvalidSegments(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("non-finite {what} at update {update}")]
    NonFinite { what: &'static str, update: u64 },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("refusing to overwrite existing file {0} (pass --force)")]
    WouldOverwrite(std::path::PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
