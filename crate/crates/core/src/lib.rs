//! Numerical toolkit for microcanonical lattice gases with long-range pair
//! interactions.
//!
//! The crate is organised bottom-up:
//!
//! * [`potential`] – pair potentials, the integrated interaction λ and
//!   cell-averaged kernel matrices.
//! * [`lattice`] – finite configurations, their energy and particle densities
//!   and the lattice/continuum discrepancy bound.
//! * [`functional`] – the rate function `H`, energy `ξ(f)` and density `N(f)`
//!   of discretized occupancy profiles.
//! * [`solver`] – entropy maximization under the energy and density
//!   constraints via the Euler–Lagrange (logistic) fixed point.
//! * [`transition`] – feasibility window, convexity-gap constant, spectral
//!   radius and the transition-curve scan.
//! * [`ensemble`] – exact enumeration and window-constrained Monte Carlo.
//! * [`cli`] – the `lrgas` command-line front end.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod format;
pub mod functional;
pub mod lattice;
pub mod potential;
mod quadrature;
pub mod solver;
pub mod transition;

pub use error::{Error, Result};

pub use functional::OccupancyProfile;
pub use potential::{KernelMatrix, Potential, PotentialKind};
