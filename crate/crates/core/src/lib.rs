//! Minimum-latency multi-hop routing between satellites scattered uniformly
//! on a sphere.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation: spherical geometry, constellation sampling, the
//! stochastic-geometry planning formulas, the routing strategies, the
//! efficiency approximations, and the single-trial Monte Carlo kernel.
//! File formats, parallel orchestration and the CLI live in the `satlink`
//! crate.

#![no_std]
// Range checks are written `!(x > 0.0)` on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod constellation;
pub mod efficiency;
mod error;
pub mod experiment;
pub mod geometry;
pub mod quadrature;
pub mod routing;

pub use analysis::{HopPlan, LinkSpec};
pub use constellation::{Constellation, Preset, SatId};
pub use error::{Error, Result};
pub use geometry::{GreatArc, PhysicalConstants, SpherePoint, Vec3};
pub use routing::{Route, RouteStatus};
