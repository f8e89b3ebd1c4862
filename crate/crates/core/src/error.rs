use thiserror::Error;

/// Everything that can go wrong when building algebras, metrics and paths.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid structure table: {0}")]
    InvalidStructure(String),

    #[error("antisymmetry violated at ({i}, {j}, {k}): c[i][j][k] + c[j][i][k] = {residual:e}")]
    AntisymmetryViolation {
        i: usize,
        j: usize,
        k: usize,
        residual: f64,
    },

    #[error("Jacobi identity violated on basis triple ({i}, {j}, {k}): residual {residual:e}")]
    JacobiViolation {
        i: usize,
        j: usize,
        k: usize,
        residual: f64,
    },

    #[error("metric is not ad-invariant on basis triple ({i}, {j}, {k}): residual {residual:e}")]
    MetricNotAdInvariant {
        i: usize,
        j: usize,
        k: usize,
        residual: f64,
    },

    #[error("metric is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    MetricNotPositiveDefinite { min_eigenvalue: f64 },

    #[error("factor decomposition invalid: {0}")]
    FactorViolation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric (residual {residual:e})")]
    NotSymmetric { residual: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("finite-difference stencil leaves the domain at t = {t}")]
    DomainTooSmall { t: f64 },

    #[error("t = {t} lies outside the path domain ({lo}, {hi})")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("vectors do not span a subalgebra: bracket leaves the span by {residual:e}")]
    SubalgebraNotClosed { residual: f64 },

    #[error("subalgebra is not abelian: |[b_i, b_j]| = {residual:e}")]
    SubalgebraNotAbelian { residual: f64 },

    #[error("empty subalgebra")]
    EmptySubalgebra,

    #[error("algebra has no factor decomposition")]
    FactorsMissing,

    #[error("algebra is not so(4) = so(3) + so(3) in standard normalization: {0}")]
    NotSo4(String),

    #[error("plane is not invariant (residual {residual:e})")]
    PlaneNotInvariant { residual: f64 },

    #[error("plane does not contain one direction in each factor")]
    PlaneNotSplit,

    #[error("{side} side: t = {t} lies outside the path domain ({lo}, {hi})")]
    RelationOutOfDomain {
        side: &'static str,
        t: f64,
        lo: f64,
        hi: f64,
    },

    #[error("scale factor must be positive, got {0}")]
    NonPositiveLambda(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
