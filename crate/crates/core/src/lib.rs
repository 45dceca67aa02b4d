//! Riemannian geometry of inner products on `R^n`, volume functions on
//! exterior powers, canonical lattice filtrations with their instability
//! function, equivariant cover sets, and a simplified geodesic flow space.

#![allow(clippy::needless_range_loop)]

pub mod cover;
pub mod error;
pub mod exterior;
pub mod flowspace;
pub mod intmat;
pub mod lattice;
pub mod linalg;
pub mod report;
pub mod sampling;
pub mod symspace;
pub mod verify;

pub use error::{Error, Result};
