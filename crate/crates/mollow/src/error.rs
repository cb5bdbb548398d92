use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("state violates density-matrix invariants: {0}")]
    InvalidState(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("steady-state system is singular, nullspace dimension != 1")]
    SingularSteadyState,

    #[error("steady-state residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    SteadyStateResidual { residual: f64, tolerance: f64 },

    #[error("||L*dt|| = {norm:.3e} exceeds the propagator conditioning bound {bound:.3e}")]
    PropagatorNorm { norm: f64, bound: f64 },

    #[error("frequency grid too fine: spacing {spacing:.3e} GHz is below the 1/(2*T_max) = {limit:.3e} GHz resolution of a T_max = {t_max:.3} ns correlation")]
    GridResolution { spacing: f64, limit: f64, t_max: f64 },

    #[error("grid too coarse: spacing {spacing:.3e} GHz exceeds {limit:.3e} GHz required here")]
    GridTooCoarse { spacing: f64, limit: f64 },

    #[error("Fock truncation did not converge by N = {max_n}: {detail}")]
    FockNonConvergence { max_n: usize, detail: String },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("no sideband pair with mirrored centers in fit result: {0}")]
    MissingSideband(String),

    #[error("lower-sideband area {0:.3e} too small for an intensity ratio")]
    VanishingSidebandArea(f64),

    #[error("Rabi target {target:.3} GHz outside the tabulated drive map range [{lo:.3}, {hi:.3}] GHz")]
    RabiMapRange { target: f64, lo: f64, hi: f64 },

    #[error("calibration did not converge after {iterations} iterations (residual {residual:.3e})")]
    CalibrationNonConvergence { iterations: usize, residual: f64 },

    #[error("invalid input data: {0}")]
    InvalidData(String),

    #[error("numerical check failed: {0}")]
    Numerics(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::LinearSolve(e.to_string())
    }
}
