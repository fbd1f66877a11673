//! Quasi-optimal experimental design for parameter identification in
//! dynamical systems: Fisher information estimation, identifiable-coordinate
//! selection, nuisance-adjusted design objectives, parameter estimation and
//! an explore–estimate–update loop.

pub mod bench;
pub mod config;
pub mod design;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod fisher;
pub(crate) mod linalg;
pub mod objectives;
pub mod subspace;
pub mod verify;

pub use error::{Error, Result};
