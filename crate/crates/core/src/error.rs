use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// `|1 + Q|` fell below the configured floor; the field is outside the
    /// regime where the polar reduction is valid.
    #[error("|1 + Q| = {value:.3e} is below the floor {floor}")]
    DenominatorNearZero { value: f64, floor: f64 },

    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("step size underflow at phi = {phi} (h = {step:.3e})")]
    StepFailure { phi: f64, step: f64 },

    #[error("trajectory left the unit disk at phi = {phi}")]
    LeftDomain { phi: f64 },

    /// The displacement is numerically zero along the whole scan segment
    /// (a period annulus rather than isolated cycles).
    #[error("displacement vanishes on the whole scan segment")]
    UnresolvedOrigin,

    #[error("function vanishes near the contour after {attempts} radius nudges")]
    ZeroOnContour { attempts: usize },

    #[error("accumulated argument {winding:.4} turns is not close to an integer")]
    NonIntegerWinding { winding: f64 },

    #[error("sup over omega vanishes")]
    DegenerateSup,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
