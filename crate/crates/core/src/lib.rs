//! Foliated Brownian motion on chart-specified foliated Riemannian manifolds.
//!
//! * [`geometry`]: leafwise differential operators and the curvature data of
//!   a foliation.
//! * [`models`]: product, Kronecker and embedded-torus foliations.
//! * [`sde`]: frame-bundle and flow constructions of the diffusion.
//! * [`harmonic`]: harmonic densities, occupation and invariance estimates.
//! * [`stats`]: Monte Carlo verifiers and goodness-of-fit tests.

pub mod error;
pub mod geometry;
pub mod harmonic;
pub mod io;
pub mod models;
pub mod rng;
pub mod sde;
pub mod stats;

pub use error::{Error, Result};
