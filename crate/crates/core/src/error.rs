//! Crate-wide error type. Every failure mode a caller can act on has its
//! own variant; the CLI maps variant names into machine-readable failure
//! lists.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bitmap mask is not one simply connected 4-component: {0}")]
    MaskNotSimplyConnected(String),
    #[error("grid too coarse: {0} inside cells (need at least 16)")]
    ResolutionTooCoarse(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("points coincide (|x-y| < 1e-12)")]
    CoincidentPoints,
    #[error("point ({0}, {1}) lies outside the domain")]
    OutsideDomain(f64, f64),
    #[error("discrete Poisson system is singular: {0}")]
    SingularSystem(String),
    #[error("no interior minimum: descent left the search box")]
    NoInteriorMinimum,
    #[error("degenerate minimum: strictness margin {margin:e} at smallest delta {delta:e}")]
    DegenerateMinimum { margin: f64, delta: f64 },
    #[error("infeasible area constraint: {0}")]
    InfeasibleArea(String),
    #[error("solver did not converge within {0} iterations")]
    NotConverged(usize),
    #[error("patch support touches the boundary of its confining ball (component {0})")]
    SupportTouchesBallBoundary(usize),
    #[error("field has empty support")]
    EmptySupport,
    #[error("circulation mismatch: integral {got:e} vs required {want:e} (tolerance {tol:e})")]
    CirculationMismatch { got: f64, want: f64, tol: f64 },
    #[error("two-ball test function infeasible: {0}")]
    TestFunctionInfeasible(String),
    #[error("CFL violation: dt*|v|_inf = {0:e} exceeds 0.5*h = {1:e}")]
    CflViolation(f64, f64),
    #[error("perturbed support leaves the domain")]
    SupportLeavesDomain,
    #[error("level-set comparison inapplicable: {0}")]
    Inapplicable(String),
    #[error("operation requires the unit disk domain")]
    NonDiskDomain,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed field dump: {0}")]
    BadFieldDump(String),
}

impl Error {
    /// Stable machine-readable name for failure lists.
    pub fn name(&self) -> &'static str {
        match self {
            Error::MaskNotSimplyConnected(_) => "MaskNotSimplyConnected",
            Error::ResolutionTooCoarse(_) => "ResolutionTooCoarse",
            Error::GridMismatch => "GridMismatch",
            Error::CoincidentPoints => "CoincidentPoints",
            Error::OutsideDomain(_, _) => "OutsideDomain",
            Error::SingularSystem(_) => "SingularSystem",
            Error::NoInteriorMinimum => "NoInteriorMinimum",
            Error::DegenerateMinimum { .. } => "DegenerateMinimum",
            Error::InfeasibleArea(_) => "InfeasibleArea",
            Error::NotConverged(_) => "NotConverged",
            Error::SupportTouchesBallBoundary(_) => "SupportTouchesBallBoundary",
            Error::EmptySupport => "EmptySupport",
            Error::CirculationMismatch { .. } => "CirculationMismatch",
            Error::TestFunctionInfeasible(_) => "TestFunctionInfeasible",
            Error::CflViolation(_, _) => "CFLViolation",
            Error::SupportLeavesDomain => "SupportLeavesDomain",
            Error::Inapplicable(_) => "Inapplicable",
            Error::NonDiskDomain => "NonDiskDomain",
            Error::InvalidConfig(_) => "ConfigError",
            Error::Io(_) => "IoError",
            Error::BadFieldDump(_) => "BadFieldDump",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
