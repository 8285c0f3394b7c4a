//! Finite-difference representations of the momentum and kinetic-energy operators on
//! uniform 1D grids.
//!
//! The crate builds closed-form central-difference stencils of arbitrary representation
//! order, assembles banded operators with periodic or hard-wall closure, evaluates the
//! periodic-grid dispersion relations and their leading error coefficients, and solves
//! the Pöschl–Teller bound-state benchmark to study convergence in grid spacing and
//! stencil order.

pub mod cli;
pub mod dispersion;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod operator;
pub mod schrodinger;
pub mod stencil;

pub use error::{Error, Result};
