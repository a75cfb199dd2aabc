//! Discrete nonlocal energy forms on radial domains, first eigenpairs,
//! Nehari-manifold ground states of a coupled gradient system, and the
//! polarization / foliated Schwarz machinery used to read symmetry off the
//! computed states.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! the randomized property suites live in the `nlsym` companion crate.

#![no_std]

extern crate alloc;

pub mod energy;
pub mod error;
pub mod field;
pub mod geometry;
pub mod kernel;
pub mod linalg;
pub mod math;
pub mod polarization;
pub mod solver;
pub mod spectral;

pub use energy::{AssemblyOptions, AssemblyStats, EnergyOperator};
pub use error::{Error, Result};
pub use field::{Field, GridShape};
pub use geometry::{DomainShape, Grid, HalfSpace, Pairing, RadialDomain};
pub use kernel::{KernelFamily, KernelSpec, TruncatedKernel};
pub use spectral::EigenResult;
