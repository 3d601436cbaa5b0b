//! Boundary theory of weighted Pascal graphs: dimensions, probability
//! functions, Martin kernels and limits, extremal boundaries and Monte Carlo
//! validation.

pub mod boundary;
pub mod cli;
pub mod dims;
pub mod error;
pub mod graph;
pub mod io;
pub mod measures;
pub mod oracles;
pub mod scalar;
pub mod selfcheck;
pub mod sequence;
pub mod simulate;
pub mod triangle;

pub use error::{Error, Result};
pub use graph::{FamilySpec, GridPoint, WeightedPascalGraph};
pub use scalar::{Scalar, ScalarMode};
