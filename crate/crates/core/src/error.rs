use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("scene invariant violated: {0}")]
    Invariant(String),

    #[error("no valid start: every eligible cell is within {min_distance} m of the target or unreachable")]
    NoValidStart { min_distance: f64 },

    #[error("category {0} has no instance in the scene")]
    MissingCategory(usize),

    #[error("scene generation failed after {attempts} attempts: {reason}")]
    GenerationFailed { attempts: usize, reason: String },

    #[error("palette is missing a color for category {0}")]
    PaletteIncomplete(usize),

    #[error("palette colors are not distinct")]
    PaletteNotInjective,

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: &'static str, left: usize, right: usize },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("goal queried before any policy prediction was made")]
    MissingInitialGoal,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("parameter must be positive: {0}")]
    NonPositive(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
