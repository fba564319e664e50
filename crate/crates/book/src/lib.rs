//! The chapters of the guide in `book/src`, included as module docs so
//! that `cargo test` runs every code block.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}

#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[doc = include_str!("../../../book/src/sde.md")]
pub mod sde {}

#[doc = include_str!("../../../book/src/harmonic.md")]
pub mod harmonic {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
