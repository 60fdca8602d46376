use thiserror::Error;

/// Errors raised by the laboratory. Every variant names the check that failed.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("point {point:?} lies outside the closed domain")]
    OutsideDomain { point: [f64; 2] },

    #[error("degenerate triangulation: minimum angle {min_angle_deg:.3} deg below floor {floor_deg:.3} deg")]
    DegenerateMesh { min_angle_deg: f64, floor_deg: f64 },

    #[error("grid function lives on a different mesh")]
    MeshMismatch,

    #[error("grid function has nonzero value {value:e} at boundary node {node}")]
    NonzeroBoundary { node: usize, value: f64 },

    #[error("non-finite stiffness entry ({row}, {col}) from element pair ({elem_a}, {elem_b})")]
    NonFiniteEntry {
        row: usize,
        col: usize,
        elem_a: usize,
        elem_b: usize,
    },

    #[error("negative quadratic form value {0:e}: stiffness matrix is corrupted")]
    NegativeEnergy(f64),

    #[error("quadrature did not converge: estimate {value:e}, error bound {error:e} above tolerance {tol:e}")]
    QuadratureFailure { value: f64, error: f64, tol: f64 },

    #[error("eigensolver did not converge after {iterations} iterations; residuals {residuals:?}")]
    EigenNonConvergence { iterations: usize, residuals: Vec<f64> },

    #[error("matrix is not positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    #[error("singular Jacobian at Newton iteration {iteration} (eigenvalue ratio {ratio:e})")]
    SingularJacobian { iteration: usize, ratio: f64 },

    #[error("non-finite nonlinearity value at node/point {location:?} (t = {t})")]
    NonFiniteNonlinearity { location: [f64; 2], t: f64 },

    #[error("constraint qualification failed: multiplier {mu:e} exceeds tolerance {tol:e}")]
    PositiveMultiplier { mu: f64, tol: f64 },

    #[error("order violation at node {node}: lower {lower} > upper {upper}")]
    OrderViolation { node: usize, lower: f64, upper: f64 },

    #[error("sandwich violated at node {node}: value {value} outside [{lower}, {upper}]")]
    SandwichViolation {
        node: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("solve failed to reach tolerance: {0}")]
    SolveFailed(String),

    #[error("certificate rejected: {0}")]
    InvalidCertificate(String),

    #[error("principle check failed: {0}")]
    CheckFailed(String),

    #[error("non-finite norm at cascade rung {rung} (exponent {exponent})")]
    NonFiniteNorm { rung: usize, exponent: f64 },
}

pub type Result<T> = std::result::Result<T, FracError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> FracError {
    FracError::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
