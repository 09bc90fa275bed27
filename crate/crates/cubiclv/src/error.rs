use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Sign(String),
    #[error("truncated division ill-conditioned: leading coefficient {value:e} below floor {floor:e}")]
    Division { value: f64, floor: f64 },
    #[error("unsupported case: {0}")]
    UnsupportedCase(String),
    #[error("two roots claim the seed basin of {0}")]
    AmbiguousLabel(String),
    #[error("curve {0} is not applicable to this degeneracy class")]
    NotApplicable(String),
    #[error("half-line constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("no root bracketed for {kind} near the seed at |mu| = {radius:e}")]
    NoRoot { kind: String, radius: f64 },
    #[error("zero eigenvalue is not simple at the collision point")]
    DegenerateJacobian,
    #[error("nondegeneracy hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("collision mismatch: expected {expected}, found {found}")]
    CollisionMismatch { expected: String, found: String },
    #[error("radius {0:e} outside the admissible range")]
    RadiusOutOfRange(f64),
    #[error("sector between angles {0} and {1} is too thin")]
    SectorTooThin(f64, f64),
    #[error("parameter point lies on a bifurcation curve ({0})")]
    OnCurve(String),
    #[error("integrator step underflow at t = {t:e}, state ({x:e}, {y:e})")]
    StepFailure { t: f64, x: f64, y: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
