//! Raviart-Thomas mixed finite elements for the Darcy problem with weakly
//! imposed flux (Neumann) boundary conditions.
//!
//! Two discrete formulations are provided: a consistent Nitsche-type scheme
//! with boundary weight `1/h` (symmetric `m = 1` or non-symmetric `m = 0`),
//! and a penalty scheme obtained from a Robin perturbation with weight
//! `1/eps`, `eps = h^(k+1)`. The crate covers mesh generation, reference
//! elements, canonical interpolants, assembly, a sparse direct solver with
//! condition-number estimation, manufactured test cases, and the study
//! drivers used by the `darcy-mixed` binary.

// Dense local kernels index several parallel arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod assembly;
pub mod cases;
pub mod error;
pub mod fe;
pub mod harness;
pub mod interpolation;
pub mod linalg;
pub mod mesh;

pub use error::{Error, Result};
