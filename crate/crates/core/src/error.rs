use thiserror::Error;

/// Errors raised by the measure, extremality, solver and problem-io layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, found {found})")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("zero measure has no non-null partition")]
    ZeroMeasure,
    #[error("not an atom")]
    NotAnAtom,
    #[error("null atom has no canonical value")]
    NullAtom,
    #[error("not a member of the moment set (residual {residual:e})")]
    NotMember { residual: f64 },
    #[error("no perturbation exists: cell moment vectors are linearly independent")]
    NoPerturbation,
    #[error("enumeration cap exceeded: {n} points > cap {cap}")]
    EnumerationCap { n: usize, cap: usize },
    #[error("solver stalled after {iterations} iterations (phase {phase}, objective {objective:e})")]
    SolverStalled {
        iterations: usize,
        phase: u8,
        objective: f64,
    },
    #[error("seed infeasible (residual {residual:e})")]
    SeedInfeasible { residual: f64 },
    #[error("evaluation fault at point {x}: {reason}")]
    EvaluationFault { x: f64, reason: String },
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            found,
        })
    }
}
