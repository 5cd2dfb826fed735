use thiserror::Error;

/// Everything that can go wrong inside the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("event at r = {r} is not outside the outer horizon r+ = {horizon}")]
    HorizonViolation { r: f64, horizon: f64 },
    #[error("sin(theta) = {sin_theta:e} is below the pole threshold")]
    PoleSingularity { sin_theta: f64 },
    #[error("four-vector norm {norm:e} does not match the requested class (expected {expected})")]
    NormViolation { norm: f64, expected: f64 },
    #[error("spin {spin} exceeds mass {mass}")]
    InvalidSpin { mass: f64, spin: f64 },
    #[error("{which} radicand is negative ({value:e})")]
    NegativeRadicand { which: &'static str, value: f64 },
    #[error("more than {0} turning points; the orbit looks trapped")]
    TurningPointStall(usize),
    #[error("adaptive step {step:e} underflowed at xi = {xi:e}")]
    StepUnderflow { step: f64, xi: f64 },
    #[error("integration ended before the stop condition was met ({0})")]
    StopNotReached(&'static str),
    #[error("no future-directed null vector realizes the requested launch ratio")]
    ForbiddenDirection,
    #[error("K = {k:e} is not above a^2 cos^2(theta) = {bound:e}")]
    DegenerateK { k: f64, bound: f64 },
    #[error("both theta components of e_2 and e_3 vanish")]
    DegenerateAxis,
    #[error("event outside the domain of the tetrad field: {0}")]
    OutsideDomain(&'static str),
    #[error("direction is antipodal to the quantization axis (n3 = {0})")]
    AntipodalSingularity(f64),
    #[error("matrix does not leave the standard null vector invariant (residual {0:e})")]
    NotLittleGroup(f64),
    #[error("finite differences could not resolve the tetrad derivative")]
    DifferentiationFailure,
    #[error("adaptive quadrature exceeded {0} subintervals")]
    QuadratureStall(usize),
    #[error("{0}")]
    DomainError(&'static str),
    #[error("no bracketed root for the constellation angle")]
    NoSolution,
}

pub type Result<T> = std::result::Result<T, Error>;
