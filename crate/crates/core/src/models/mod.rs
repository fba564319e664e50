//! Built-in foliated manifolds with analytic metric, leaf frame, Christoffel
//! symbols and, where available, closed-form leaf flows and diffusions.
//!
//! * [`ProductModel`]: `ℝ^q × ℝ^p` foliated by the second factor.
//! * [`KroneckerModel`]: lines of slope `(a, 1)` in the plane or flat torus.
//! * [`EmbeddedTorusModel`]: the torus of revolution in `ℝ³`,
//!   `g = dx² + (b + cos x)² dy²`, foliated by a unit field of slope `α`.

mod kronecker;
mod product;
mod torus;

pub use kronecker::{kronecker_fobm, KroneckerModel};
pub use product::ProductModel;
pub use torus::{example3_closed_form_fobm, example3_flow, EmbeddedTorusModel};

/// Default torus radius ratio for fixtures.
pub const DEFAULT_B: f64 = 2.0;
/// Default leaf slope for fixtures.
pub const DEFAULT_ALPHA: f64 = 1.0;
