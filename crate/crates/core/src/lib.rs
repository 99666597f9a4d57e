//! Flexural Bloch waves in thin plates pinned at the points of a doubly
//! periodic lattice: dispersion, Dirac points, density of states and finite
//! cluster response.

pub mod bands;
pub mod cluster;
pub mod error;
pub mod green;
pub mod lattice;
pub mod latsum;
pub mod lightlines;
mod quad;
pub mod specfun;

pub use error::{Error, Result};
pub use lattice::{BlochVector, Lattice, LatticeFamily, SymmetryPoint};
pub use latsum::{Parity, SumConfig};
