use thiserror::Error;

/// Errors raised by the geometry kernels, integrators and verifiers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate leaf frame: Gram-Schmidt pivot {pivot:e} below {floor:e}")]
    DegenerateFrame { pivot: f64, floor: f64 },

    #[error("singular metric: det(g) = {det:e}")]
    SingularMetric { det: f64 },

    #[error("vector is not tangent to the leaf: normal component {residual:e}")]
    NotInE { residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("step {step} of path {path} rejected: {reason}")]
    StepRejected {
        path: usize,
        step: usize,
        reason: String,
    },

    #[error("leaf field is not geodesic: |nabla^E_Y Y| = {norm:e}")]
    NotGeodesicLeafField { norm: f64 },

    #[error("no numerical null vector: smallest singular value {sigma_min:e}")]
    NoNullVector { sigma_min: f64 },

    #[error("null vector changes sign; no positive density")]
    SignChange,

    #[error("invalid collocation grid N = {n}: {reason}")]
    InvalidGrid { n: usize, reason: &'static str },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("test not applicable to model `{model}`: {reason}")]
    WrongModel { model: String, reason: String },

    #[error("ensemble was thinned with stride {stride}; every step is required")]
    ThinnedEnsemble { stride: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
