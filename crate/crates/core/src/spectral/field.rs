use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft;
use super::grid::{node, wavenumber, TorusGrid};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fourier coefficients `n̂(k, l)` of a scalar field on `T²`, FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField2D {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

/// Collocation norms of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

impl SpectralField2D {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            coeffs: vec![ZERO; grid.len()],
        }
    }

    pub fn constant(grid: TorusGrid, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    /// `amp · e^{i(kx + ly)}`; not real-valued on its own.
    pub fn single_mode(grid: TorusGrid, k: i64, l: i64, amp: Complex64) -> Self {
        let mut f = Self::zeros(grid);
        f.set(k, l, amp);
        f
    }

    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for a {}x{} grid",
                coeffs.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    /// Transform row-major samples `f(x_i, y_j)` (index `i * ny + j`).
    pub fn from_physical(grid: TorusGrid, samples: &[f64]) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} samples for a {}x{} grid",
                samples.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft::forward_2d(&grid, &mut buf);
        Ok(Self { grid, coeffs: buf })
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut samples = Vec::with_capacity(grid.len());
        for i in 0..grid.nx() {
            let x = grid.x_node(i);
            for j in 0..grid.ny() {
                samples.push(f(x, grid.y_node(j)));
            }
        }
        Self::from_physical(grid, &samples).expect("sample count matches grid")
    }

    #[inline]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    #[inline]
    pub fn get(&self, k: i64, l: i64) -> Complex64 {
        self.coeffs[self.grid.index(k, l)]
    }

    #[inline]
    pub fn set(&mut self, k: i64, l: i64, v: Complex64) {
        let idx = self.grid.index(k, l);
        self.coeffs[idx] = v;
    }

    /// Mean value `n̄`, read from the (0,0) coefficient.
    #[inline]
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// Collocation samples, real parts only.
    pub fn to_physical(&self) -> Vec<f64> {
        self.to_physical_complex().into_iter().map(|c| c.re).collect()
    }

    pub fn to_physical_complex(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        fft::inverse_2d(&self.grid, &mut buf);
        buf
    }

    /// Largest `|c(-k,-l) - conj(c(k,l))|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.max_abs_coeff();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for (idx, k, l) in self.grid.modes() {
            let partner = self.coeffs[self.grid.index(-k, -l)];
            worst = worst.max((partner - self.coeffs[idx].conj()).norm());
        }
        worst / scale
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_defect() <= rel_tol
    }

    /// Replace the field by its real part, `c ← (c(k,l) + conj c(-k,-l)) / 2`.
    /// Real parts of self-paired modes such as `(0,0)` are left bit-identical.
    pub fn symmetrize(&mut self) {
        let old = self.coeffs.clone();
        for (idx, k, l) in self.grid.modes() {
            let partner = old[self.grid.index(-k, -l)];
            self.coeffs[idx] = (old[idx] + partner.conj()) * 0.5;
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Shape(format!(
                "fields live on {}x{} and {}x{} grids",
                self.grid.nx(),
                self.grid.ny(),
                other.grid.nx(),
                other.grid.ny()
            )));
        }
        Ok(())
    }

    pub fn map_modes(&self, f: impl Fn(i64, i64, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .grid
            .modes()
            .map(|(idx, k, l)| f(k, l, self.coeffs[idx]))
            .collect();
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.grid, other.grid);
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *c += o * a;
        }
    }

    /// `∫ conj(self) · other` over `T²` via Parseval.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let s: Complex64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * (4.0 * PI * PI)
    }

    /// `‖f‖_{L²}` via Parseval, so that `‖e^{i(kx+ly)}‖ = 2π`.
    pub fn l2_norm(&self) -> f64 {
        2.0 * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Homogeneous `‖Λ^s f‖_{L²}` over the nonzero modes.
    pub fn hs_seminorm(&self, s: f64) -> f64 {
        let sum: f64 = self
            .grid
            .modes()
            .filter(|&(_, k, l)| k != 0 || l != 0)
            .map(|(idx, k, l)| ((k * k + l * l) as f64).powf(s) * self.coeffs[idx].norm_sqr())
            .sum();
        2.0 * PI * sum.sqrt()
    }

    /// Inhomogeneous `‖f‖_{H¹} = (‖f‖² + ‖∇f‖²)^{1/2}`.
    pub fn h1_norm(&self) -> f64 {
        let sum: f64 = self
            .grid
            .modes()
            .map(|(idx, k, l)| (1.0 + (k * k + l * l) as f64) * self.coeffs[idx].norm_sqr())
            .sum();
        2.0 * PI * sum.sqrt()
    }

    /// L¹ and L∞ from collocation samples, L² via Parseval.
    pub fn norms(&self) -> Norms {
        let samples = self.to_physical();
        Norms {
            l1: samples.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_area(),
            l2: self.l2_norm(),
            linf: samples.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }

    /// `‖self - other‖ / ‖other‖` in L².
    pub fn rel_l2_distance(&self, other: &Self) -> f64 {
        let diff = self - other;
        let base = other.l2_norm();
        if base == 0.0 {
            diff.l2_norm()
        } else {
            diff.l2_norm() / base
        }
    }
}

impl Add for &SpectralField2D {
    type Output = SpectralField2D;
    fn add(self, rhs: Self) -> SpectralField2D {
        debug_assert_eq!(self.grid, rhs.grid);
        SpectralField2D {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SpectralField2D {
    type Output = SpectralField2D;
    fn sub(self, rhs: Self) -> SpectralField2D {
        debug_assert_eq!(self.grid, rhs.grid);
        SpectralField2D {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &SpectralField2D {
    type Output = SpectralField2D;
    fn neg(self) -> SpectralField2D {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &SpectralField2D {
    type Output = SpectralField2D;
    fn mul(self, rhs: f64) -> SpectralField2D {
        self.scaled(rhs)
    }
}

/// Fourier coefficients of a function of `y` alone on `T = [-π, π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField1D {
    coeffs: Vec<Complex64>,
}

impl SpectralField1D {
    pub fn zeros(ny: usize) -> Self {
        Self {
            coeffs: vec![ZERO; ny],
        }
    }

    pub fn constant(ny: usize, value: f64) -> Self {
        let mut f = Self::zeros(ny);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        let n = coeffs.len();
        if n < 2 || n % 2 != 0 {
            return Err(Error::Shape(format!("1D field needs an even length, got {n}")));
        }
        Ok(Self { coeffs })
    }

    pub fn from_physical(samples: &[f64]) -> Result<Self> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        if buf.len() < 2 || buf.len() % 2 != 0 {
            return Err(Error::Shape(format!(
                "1D field needs an even length, got {}",
                buf.len()
            )));
        }
        fft::forward_1d(&mut buf);
        Ok(Self { coeffs: buf })
    }

    pub fn from_fn(ny: usize, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = (0..ny).map(|j| f(node(j, ny))).collect();
        Self::from_physical(&samples).expect("even sample count")
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn get(&self, l: i64) -> Complex64 {
        self.coeffs[l.rem_euclid(self.ny() as i64) as usize]
    }

    #[inline]
    pub fn set(&mut self, l: i64, v: Complex64) {
        let n = self.ny() as i64;
        self.coeffs[l.rem_euclid(n) as usize] = v;
    }

    #[inline]
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// `(signed wavenumber, coefficient)` pairs.
    pub fn modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let n = self.ny();
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(j, c)| (wavenumber(j, n), *c))
    }

    pub fn map_modes(&self, f: impl Fn(i64, Complex64) -> Complex64) -> Self {
        Self {
            coeffs: self.modes().map(|(l, c)| f(l, c)).collect(),
        }
    }

    pub fn to_physical(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        fft::inverse_1d(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    pub fn hermitian_defect(&self) -> f64 {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        self.modes()
            .map(|(l, c)| (self.get(-l) - c.conj()).norm())
            .fold(0.0, f64::max)
            / scale
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// L¹, L², L∞ over `T` (L² via Parseval, `‖e^{ily}‖ = √(2π)`).
    pub fn norms(&self) -> Norms {
        let samples = self.to_physical();
        let h = 2.0 * PI / self.ny() as f64;
        Norms {
            l1: samples.iter().map(|v| v.abs()).sum::<f64>() * h,
            l2: self.l2_norm(),
            linf: samples.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        (2.0 * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// The x-independent field on `T²` with these y-coefficients.
    pub fn to_2d(&self, grid: TorusGrid) -> Result<SpectralField2D> {
        if grid.ny() != self.ny() {
            return Err(Error::Shape(format!(
                "1D field of length {} does not fit ny = {}",
                self.ny(),
                grid.ny()
            )));
        }
        let mut f = SpectralField2D::zeros(grid);
        f.coeffs_mut()[..self.ny()].copy_from_slice(&self.coeffs);
        Ok(f)
    }
}

impl Add for &SpectralField1D {
    type Output = SpectralField1D;
    fn add(self, rhs: Self) -> SpectralField1D {
        SpectralField1D {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SpectralField1D {
    type Output = SpectralField1D;
    fn sub(self, rhs: Self) -> SpectralField1D {
        SpectralField1D {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}
