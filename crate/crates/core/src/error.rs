use thiserror::Error;

/// Errors raised by the numerical engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("delta-function potentials have no pointwise value")]
    DeltaNotPointwise,
    #[error("delta centers must be strictly increasing (center {index} is not above its predecessor)")]
    UnorderedCenters { index: usize },
    #[error("delta center {index} = {value} lies outside the open interval (0, 1)")]
    CenterOutOfRange { index: usize, value: f64 },
    #[error("delta array must contain at least one center")]
    EmptyArray,
    #[error("{centers} centers but {couplings} couplings")]
    LengthMismatch { centers: usize, couplings: usize },
    #[error("coupling constant {index} is not finite")]
    NonFiniteCoupling { index: usize },
    #[error("gain profile is not integrable on [0, 1]: {0}")]
    NonIntegrableProfile(String),
    #[error("wave number {0} is below the minimum 1e-6")]
    ZeroWaveNumber(f64),
    #[error("integration step size underflow at x = {x}")]
    StepSizeUnderflow { x: f64 },
    #[error("refractive root vanishes (|n| = {0:e})")]
    RefractiveRootVanishes(f64),
    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),
    #[error("point is not a spectral singularity of the unperturbed barrier (residual {residual:e})")]
    NotAtSingularity { residual: f64 },
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { what: String, iterations: usize, residual: f64 },
    #[error("Newton Jacobian is singular")]
    JacobianSingular,
    #[error("linear equation for the first-order corrections is degenerate (Im(X conj Y) ~ 0)")]
    DegenerateXY,
    #[error("F010 vanishes; the correction hierarchy is degenerate")]
    DegenerateF010,
    #[error("no spectral singularity in the requested range")]
    NoRootInRange,
    #[error("position z = {z_um} um lies outside the slab of half-width {half_width_um} um")]
    OutsideSlab { z_um: f64, half_width_um: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mode {mode}, nu = {nu}, {pumping} pumping: {source}")]
    Cell { mode: i64, nu: f64, pumping: String, source: Box<Error> },
}

impl Error {
    /// True for failures of an iterative solver to converge.
    pub fn is_convergence_failure(&self) -> bool {
        match self {
            Error::NoConvergence { .. } | Error::JacobianSingular | Error::StepSizeUnderflow { .. } => true,
            Error::Cell { source, .. } => source.is_convergence_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
