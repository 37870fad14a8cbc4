//! Spectra of the Laplace–Beltrami operator on closed surfaces evolving by
//! the two-dimensional Ricci flow.

pub mod error;
pub mod experiment;
pub mod flow;
pub mod mesh;
pub mod modelspaces;
pub mod sparse;
pub mod spectral;
pub mod variation;

pub use error::{Error, Result};
