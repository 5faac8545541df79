use num_complex::Complex64;

use super::field::SpectralField2D;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// A Fourier multiplier: a symbol sampled on every retained `(k, l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    grid: TorusGrid,
    symbol: Vec<Complex64>,
}

impl Multiplier {
    pub fn from_fn(grid: TorusGrid, f: impl Fn(i64, i64) -> Complex64) -> Self {
        let symbol = grid.modes().map(|(_, k, l)| f(k, l)).collect();
        Self { grid, symbol }
    }

    pub fn real(grid: TorusGrid, f: impl Fn(i64, i64) -> f64) -> Self {
        Self::from_fn(grid, |k, l| Complex64::new(f(k, l), 0.0))
    }

    /// `(k² + l²)^{s/2}` on nonzero modes, zero at the origin. Negative `s`
    /// gives the mean-zero inverse.
    pub fn frac_power(grid: TorusGrid, s: f64) -> Self {
        Self::real(grid, move |k, l| radial_power(k, l, s))
    }

    /// `(k² + l²)^{-1}` on nonzero modes, zero at the origin.
    pub fn inverse_laplacian(grid: TorusGrid) -> Self {
        Self::real(grid, |k, l| {
            if k == 0 && l == 0 {
                0.0
            } else {
                1.0 / (k * k + l * l) as f64
            }
        })
    }

    /// `ik`; the unpaired row `k = -nx/2` is zeroed so real fields stay real.
    pub fn ddx(grid: TorusGrid) -> Self {
        let nyq = -((grid.nx() / 2) as i64);
        Self::from_fn(grid, move |k, _| {
            if k == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k as f64)
            }
        })
    }

    /// `il`; the unpaired column `l = -ny/2` is zeroed.
    pub fn ddy(grid: TorusGrid) -> Self {
        let nyq = -((grid.ny() / 2) as i64);
        Self::from_fn(grid, move |_, l| {
            if l == nyq {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, l as f64)
            }
        })
    }

    /// `e^{-c (k² + l²)^{α/2}}`, the exact diffusion propagator for time `c/ν`.
    pub fn heat(grid: TorusGrid, c: f64, alpha: f64) -> Self {
        Self::real(grid, move |k, l| (-c * radial_power(k, l, alpha)).exp())
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn apply(&self, f: &SpectralField2D) -> Result<SpectralField2D> {
        if *f.grid() != self.grid {
            return Err(Error::Shape(format!(
                "multiplier on {}x{} applied to a {}x{} field",
                self.grid.nx(),
                self.grid.ny(),
                f.grid().nx(),
                f.grid().ny()
            )));
        }
        Ok(self.apply_unchecked(f))
    }

    pub(crate) fn apply_unchecked(&self, f: &SpectralField2D) -> SpectralField2D {
        let mut out = f.clone();
        self.apply_in_place(&mut out);
        out
    }

    pub fn apply_in_place(&self, f: &mut SpectralField2D) {
        debug_assert_eq!(*f.grid(), self.grid);
        for (c, s) in f.coeffs_mut().iter_mut().zip(&self.symbol) {
            *c *= s;
        }
    }

    /// Pointwise product of symbols: `(self ∘ other) f = self(other f)`.
    pub fn compose(&self, other: &Multiplier) -> Multiplier {
        debug_assert_eq!(self.grid, other.grid);
        Multiplier {
            grid: self.grid,
            symbol: self.symbol.iter().zip(&other.symbol).map(|(a, b)| a * b).collect(),
        }
    }
}

/// `(k² + l²)^{s/2}` with the origin mapped to zero.
#[inline]
pub fn radial_power(k: i64, l: i64, s: f64) -> f64 {
    if k == 0 && l == 0 {
        0.0
    } else {
        ((k * k + l * l) as f64).powf(0.5 * s)
    }
}
