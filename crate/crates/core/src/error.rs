use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("basis index {index} out of range for dimension {dim}")]
    BadIndex { index: usize, dim: usize },

    #[error("algebra is not nilpotent: the central series stabilizes at dimension {stalled_dim}")]
    NotNilpotent { stalled_dim: usize },

    #[error("basis is not adapted to the lower central series: {0}")]
    NotAdapted(String),

    #[error("level {level} out of range for an algebra of step {step}")]
    LevelOutOfRange { level: usize, step: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("word letter {letter} out of range for {generators} generators")]
    BadLetter { letter: usize, generators: usize },

    #[error("words have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),

    #[error("lattice integrality check failed: {0}")]
    NotIntegral(String),

    #[error("invalid probability vector: {0}")]
    BadProbabilities(String),

    #[error("character {0:?} is not well defined on the nilmanifold")]
    IllDefinedCharacter(Vec<i64>),

    #[error("resonant character {0:?}: contraction factor equals 1")]
    Resonance(Vec<i64>),

    #[error("not enough data: {0}")]
    NotEnoughData(String),

    #[error("malformed algebra description: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
