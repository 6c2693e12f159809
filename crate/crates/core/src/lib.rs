//! Convex structured grids on irregular polygonal regions, generalized
//! finite differences and linear finite elements for anisotropic diffusion,
//! and a harness comparing both.

pub mod cli;
pub mod error;
pub mod fem;
pub mod functionals;
pub mod geometry;
pub mod gfd;
pub mod grid;
pub mod problems;
pub mod report;
pub mod sparse;
pub mod triangulation;
mod textio;

pub use error::{Error, Result};
pub use geometry::{Point, Polygon};
pub use grid::{BoundarySpec, StructuredGrid};
