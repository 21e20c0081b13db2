//! Nonlocal phase-field fronts on the line.
//!
//! Minimal transition profiles for one- and two-component nonlocal free
//! energies, one-dimensional optimal transport between profiles, numerical
//! displacement-convexity checks and surface tensions.

pub mod bulk;
pub mod cli;
pub mod convexity;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod kernels;
pub mod multidim;
pub mod potential;
pub mod quad;
pub mod rearrange;
pub mod report;
pub mod solvers;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{Grid, MonotoneProfile, Orientation, QuantileFunction};
pub use kernels::{ConvexTable, Kernel, RadialKernel, RadialShape, Stencil, WPotential};
pub use potential::{Potential, QuarticWell};
