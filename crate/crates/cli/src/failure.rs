use serde::Serialize;
use triality_core::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;
pub const EXIT_DOMAIN_EXIT: i32 = 5;

/// A run outcome other than success, with its process exit code. Also the
/// `error` block of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, kind: &str, message: impl Into<String>) -> Self {
        Failure {
            code,
            kind: kind.to_string(),
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Failure::new(EXIT_VALIDATION, "validation", message)
    }

    pub fn invariant(failed: &[String]) -> Self {
        Failure::new(
            EXIT_INVARIANT,
            "invariant_violation",
            format!("failed checks: {}", failed.join(", ")),
        )
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure::new(EXIT_IO, "io", message)
    }

    pub fn from_core(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::InvalidConfig(_) => (EXIT_VALIDATION, "invalid_config"),
            Error::InvalidPotential(_) => (EXIT_VALIDATION, "invalid_potential"),
            Error::UnsupportedPotential(_) => (EXIT_VALIDATION, "unsupported_potential"),
            Error::NegativeCost { .. } => (EXIT_VALIDATION, "negative_cost"),
            Error::OutOfDomain { .. } => (EXIT_VALIDATION, "out_of_domain"),
            Error::SeedTruncation { .. } => (EXIT_SOLVER, "seed_truncation"),
            Error::TruncationDomain { .. } => (EXIT_SOLVER, "truncation_domain"),
            Error::StepSizeUnderflow { .. } => (EXIT_SOLVER, "step_size_underflow"),
            Error::Domain(_) => (EXIT_SOLVER, "domain"),
            Error::DomainExit { .. } => (EXIT_DOMAIN_EXIT, "domain_exit"),
        };
        Failure::new(code, kind, e.to_string())
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl std::error::Error for Failure {}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::from_core(e)
    }
}
