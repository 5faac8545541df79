//! Grids, transforms, Fourier multipliers, projections and norms on the
//! 2π-periodic torus and circle.

mod fft;
mod field;
mod grid;
pub mod io;
mod multiplier;
pub mod ops;

pub use field::{Norms, SpectralField1D, SpectralField2D};
pub use grid::TorusGrid;
pub use multiplier::{radial_power, Multiplier};
pub use ops::*;
