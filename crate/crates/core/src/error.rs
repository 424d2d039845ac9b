use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WoetError {
    #[error("row {0} has zero mass; its disintegration is undefined")]
    ZeroMassRow(usize),
    #[error("measures live on different ground sets")]
    GroundMismatch,
    #[error("scale factor must be nonnegative, got {0}")]
    NegativeScale(f64),
    #[error("entropy argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
    #[error("psi = {psi} lies outside the witness domain (must be < {bound})")]
    PsiOutOfDomain { psi: f64, bound: f64 },
    #[error("weights do not form a probability vector (sum = {0})")]
    NotAProbability(f64),
    #[error("convex envelope needs at least one finite value")]
    EmptyFinitePart,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("problem is infeasible: {0}")]
    InfeasibleProblem(String),
    #[error("instance too large for the brute-force oracle: {0}")]
    TooLarge(String),
    #[error("dual pair is infeasible (max violation {0:e})")]
    InfeasiblePair(f64),
    #[error("dual triple is infeasible (max violation {0:e})")]
    InfeasibleTriple(f64),
    #[error("lifted plan violates a constraint: {0}")]
    ConstraintViolated(String),
    #[error("hypotheses not met: {0}")]
    HypothesesNotMet(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("io error: {0}")]
    Io(String),
}

impl WoetError {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            WoetError::ZeroMassRow(_) => "zero_mass_row",
            WoetError::GroundMismatch => "ground_mismatch",
            WoetError::NegativeScale(_) => "negative_scale",
            WoetError::NegativeArgument(_) => "negative_argument",
            WoetError::PsiOutOfDomain { .. } => "psi_out_of_domain",
            WoetError::NotAProbability(_) => "not_a_probability",
            WoetError::EmptyFinitePart => "empty_finite_part",
            WoetError::ShapeMismatch(_) => "shape_mismatch",
            WoetError::InfeasibleProblem(_) => "infeasible_problem",
            WoetError::TooLarge(_) => "too_large",
            WoetError::InfeasiblePair(_) => "infeasible_pair",
            WoetError::InfeasibleTriple(_) => "infeasible_triple",
            WoetError::ConstraintViolated(_) => "constraint_violated",
            WoetError::HypothesesNotMet(_) => "hypotheses_not_met",
            WoetError::Unsupported(_) => "unsupported",
            WoetError::Parse { .. } => "parse_error",
            WoetError::Validation(_) => "validation_error",
            WoetError::Io(_) => "io_error",
        }
    }
}

impl From<std::io::Error> for WoetError {
    fn from(e: std::io::Error) -> Self {
        WoetError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, WoetError>;
