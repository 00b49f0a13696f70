//! Off-road navigation as a linear program over densities.
//!
//! The planner lifts single-integrator navigation into the space of
//! occupation densities. Perron-Frobenius generators are estimated from
//! snapshot data on a Gaussian radial basis, the resulting finite linear
//! program is solved with an embedded interior-point method, and the
//! feedback `u = ρ̄ / ρ` is rolled out over a heightmap terrain. A grid A*
//! planner is included as a baseline.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command line live in `pfnav-std` (library name `pfnav`).

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baseline;
pub mod basis;
pub mod control;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod nav;
pub mod operator;
pub mod planner;
pub mod terrain;

pub use error::{Error, Result};
pub use geometry::Vec2;
pub use linalg::Matrix;
