//! Numerical laboratory for the degenerate Caffarelli–Kohn–Nirenberg
//! problem on the cylinder `C = R x S^{d-1}`, restricted to the
//! Felli–Schneider curve.
//!
//! Fields are axisymmetric: one profile in `t` per zonal harmonic degree.
//! Everything downstream (bubbles, dual norms, constrained solves, the
//! optimal decomposition and the two-bubble sweeps) works on that
//! representation.

pub mod banded;
pub mod bubbles;
pub mod calculus;
pub mod cylinder;
pub mod decompose;
mod error;
pub mod exec;
pub mod linops;
pub mod params;
pub mod stability_lab;

pub use bubbles::BubbleSpec;
pub use cylinder::{Field, Grid};
pub use error::{Error, Result};
pub use params::FsParameters;
