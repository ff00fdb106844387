use thiserror::Error;

pub type Result<T> = std::result::Result<T, MlError>;

#[derive(Debug, Error)]
pub enum MlError {
    #[error(transparent)]
    Core(#[from] anonlab_core::Error),

    #[error("training set is empty")]
    EmptyTraining,

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter grid is empty")]
    EmptyGrid,
}
