//! projlab: a laboratory for relaxed/alternating projection dynamics.
//!
//! The crate provides exact projection operators onto linear subspaces,
//! affine sets, H-represented polyhedra, one-dimensional epigraphs, and
//! homogenized (conified) epigraphs; face-lattice machinery for polyhedral
//! sets; a reproducible iteration engine; series diagnostics for step-norm
//! power sums; and faithful desk-scale reproductions of three limiting
//! alternating-projection examples alongside the positive polyhedral-cone
//! case.

pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod faces;
pub mod geometry;
mod numerics;
pub mod projectors;
pub mod sets;
pub mod verify;

pub use error::{Error, Result};
pub use geometry::{OrthoBasis, Point, Tolerances};
pub use sets::{FlatFamily, HalfspaceSystem, RelaxedStep, SetSpec};
