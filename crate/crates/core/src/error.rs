use thiserror::Error;

/// Errors raised by the solver pipeline.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cost function is negative at r = {r}: b(r) = {value}")]
    NegativeCost { r: f64, value: f64 },

    #[error("r = {r} is outside the domain [0, {max}]")]
    OutOfDomain { r: f64, max: f64 },

    #[error("potential has no power-series expansion at the origin: {0}")]
    UnsupportedPotential(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("r = {r} exceeds the series truncation radius {radius}")]
    TruncationDomain { r: f64, radius: f64 },

    #[error(
        "series truncation error {estimate:e} at seed radius {epsilon} exceeds abs_tol {abs_tol:e}; \
         increase the series order or decrease epsilon"
    )]
    SeedTruncation {
        epsilon: f64,
        estimate: f64,
        abs_tol: f64,
    },

    #[error("step size underflow at r = {r} (h = {h:e}); problem too stiff for the tolerance budget")]
    StepSizeUnderflow { r: f64, h: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{fraction:.3} of simulated paths left the solved domain (limit 0.5)")]
    DomainExit { fraction: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
