//! Pointwise Riemannian and foliated operators on chart-specified models.
//!
//! A [`FoliatedModel`] gives the metric `g` and a frame spanning the leaf
//! distribution `E`. From those the module derives the orthogonal projection
//! `π: TM → E`, the Levi-Civita connection, the leafwise operators
//! `grad_E`, `div_E`, `Hess_E`, `Δ_E`, the second fundamental form `W`, the
//! mean curvature `K`, and the leaf field `κ` characterized by
//! `g(κ, X) = div_E X − div X` for sections `X` of `E`.
//!
//! Analytic data (Christoffel symbols, partials of test functions) is used
//! when available; otherwise five-point central differences with step
//! [`FoliatedModel::fd_step`].

pub mod fd;
mod frame;
mod model;
mod ops;
mod types;

pub use frame::{
    gram_schmidt, local_frame, metric_at, normal_basis_indices, normal_frame, normal_frame_with,
    orthonormal_e_frame, project_e, project_normal, LocalFrame,
};
pub use model::{ChartModel, ChartModelBuilder, FoliatedModel};
pub use ops::{
    christoffels, covariant_derivative, decomposition_residual, decomposition_terms,
    directional_derivative, div, div_e, fd_christoffels, grad, grad_e, grad_e_basis, hess, hess_e,
    hess_e_with, kappa, laplacian_e, laplacian_e_via_div, laplacian_full, mean_curvature,
    second_fundamental_form, second_fundamental_form_with, DecompositionTerms, Extension,
    VectorField,
};
pub use types::{wrap_angle, ChartPoint, Christoffels, MetricSample, ScalarField, TangentVector};

/// Linear-algebra consistency tolerance (`g · g⁻¹ = I`, `√det g` squared).
pub const TOL_LIN: f64 = 1e-10;
/// Orthonormality and membership-in-`E` tolerance.
pub const TOL_FRAME: f64 = 1e-10;
/// Analytic vs finite-difference cross-checks.
pub const TOL_FD: f64 = 1e-4;
/// Two-route identities when test functions carry analytic partials.
pub const TOL_ROUTES_ANALYTIC: f64 = 1e-6;
/// Two-route identities when partials come from finite differences.
pub const TOL_ROUTES_FD: f64 = 1e-3;
/// Degenerate metric / Gram-Schmidt pivot floor.
pub const DEGENERACY_FLOOR: f64 = 1e-12;
/// Default step of the five-point stencil.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

/// Route tolerance for a test function, by derivative provenance.
pub fn tol_routes(f: &ScalarField) -> f64 {
    if f.is_analytic() {
        TOL_ROUTES_ANALYTIC
    } else {
        TOL_ROUTES_FD
    }
}
