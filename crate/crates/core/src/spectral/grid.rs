use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Collocation grid on the 2π-periodic torus `[-π, π)²`.
///
/// Fourier coefficients are stored in FFT order: storage index `i` holds the
/// wavenumber `i` for `i < n/2` and `i - n` otherwise, so the retained range
/// is `-n/2 ..= n/2 - 1` on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    nx: usize,
    ny: usize,
}

impl TorusGrid {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::Parameter(format!(
                    "{name} = {n} must be a power of two and at least 8"
                )));
            }
        }
        Ok(Self { nx, ny })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed x-wavenumber held at storage row `i`.
    #[inline]
    pub fn kx(&self, i: usize) -> i64 {
        wavenumber(i, self.nx)
    }

    /// Signed y-wavenumber held at storage column `j`.
    #[inline]
    pub fn ly(&self, j: usize) -> i64 {
        wavenumber(j, self.ny)
    }

    /// Storage offset of wavenumber pair `(k, l)`; wavenumbers are taken modulo the grid.
    #[inline]
    pub fn index(&self, k: i64, l: i64) -> usize {
        storage_index(k, self.nx) * self.ny + storage_index(l, self.ny)
    }

    /// Whether `(k, l)` lies in the retained range.
    pub fn contains(&self, k: i64, l: i64) -> bool {
        let (hx, hy) = ((self.nx / 2) as i64, (self.ny / 2) as i64);
        (-hx..hx).contains(&k) && (-hy..hy).contains(&l)
    }

    pub fn x_node(&self, i: usize) -> f64 {
        node(i, self.nx)
    }

    pub fn y_node(&self, j: usize) -> f64 {
        node(j, self.ny)
    }

    /// Largest retained |k| with a Hermitian partner (`nx/2 - 1`).
    pub fn k_max(&self) -> i64 {
        (self.nx / 2 - 1) as i64
    }

    /// Area element of the collocation quadrature.
    pub fn cell_area(&self) -> f64 {
        4.0 * PI * PI / self.len() as f64
    }

    /// Iterator over `(storage offset, k, l)`.
    pub fn modes(&self) -> impl Iterator<Item = (usize, i64, i64)> + '_ {
        (0..self.nx).flat_map(move |i| {
            let k = self.kx(i);
            (0..self.ny).map(move |j| (i * self.ny + j, k, self.ly(j)))
        })
    }
}

#[inline]
pub(crate) fn wavenumber(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

#[inline]
pub(crate) fn storage_index(k: i64, n: usize) -> usize {
    k.rem_euclid(n as i64) as usize
}

#[inline]
pub(crate) fn node(i: usize, n: usize) -> f64 {
    -PI + 2.0 * PI * i as f64 / n as f64
}
