//! Spectral analysis and simulation of the aggregation equation with
//! fractional diffusion and shear advection on the torus `[-π, π)²`.

pub mod error;
pub mod expm;
pub mod kernels;
pub mod linear;
pub mod pseudospectrum;
pub mod shear;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
