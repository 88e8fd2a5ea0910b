//! Gamblet multiresolution decomposition and solvers for scalar
//! divergence-form elliptic problems on the unit square with rough
//! coefficients.
//!
//! The fine discretization is Q1 on a `2^q x 2^q` interior grid. The exact
//! transform ([`exact`]) builds the whole hierarchy of operator-adapted
//! wavelets and decomposes the solve into independent subband systems; the
//! localized transform ([`fast`]) truncates every basis computation to a patch
//! and runs in near-linear time. [`oracle`] holds dense reference
//! formulas and [`diagnostics`] turns a run into tables.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod exact;
pub mod fast;
pub mod fem;
pub mod grid;
pub mod hierarchy;
pub mod io;
pub mod oracle;
pub mod sparse;

pub use error::{Error, Result};
pub use exact::{exact_solve, ExactTransform, MultiresSolution};
pub use fast::{fast_solve, FastTransform, LocalizationSchedule};
pub use grid::{CoefficientField, Grid, LoadVector};
pub use hierarchy::{IndexTree, WVariant};
pub use sparse::{cg_solve, CgOptions, CgReport, CsrMatrix};
