//! Two-scale simulator for double-porosity diffusion.
//!
//! A macroscopic diffusion equation on a domain `Ω` is coupled to a family of
//! microscopic cell problems, one per macro node. Each cell is the image of
//! the reference unit ball `B` under a diffeomorphism `Ψ(x,·)`; the cell
//! equation is driven by the Laplace–Beltrami operator of the induced metric.
//! The two scales are coupled through a trace-matching condition (cell
//! boundary density equals the macro density) and an exchange flux `q(U)`
//! that feeds the net cell boundary flux back into the macro balance.
//!
//! The crate is organized along the pipeline:
//!
//! * [`geometry`] — macro meshes (interval, periodic strip under a profile
//!   graph) and reference cell meshes (interval, radially symmetric ball).
//! * [`cellmap`] — the diffeomorphism catalog and induced metric data.
//! * [`operators`] — macro Laplacian, per-cell operators, and the coupled
//!   block operator together with its weighted mass operator.
//! * [`solver`] — implicit theta-scheme time stepping with per-cell Schur
//!   elimination, plus the two-stage resolvent.
//! * [`gravity`] — the periodic-strip variant with a quadratic outflow
//!   condition on the bottom boundary.
//! * [`analysis`] — spectral bound, decay-rate fitting, mass functional,
//!   sector probes and manufactured-solution convergence studies.

pub mod analysis;
pub mod cellmap;
pub mod error;
pub mod geometry;
pub mod gravity;
pub mod linalg;
pub mod operators;
pub mod solver;

pub use error::{Error, Result};
