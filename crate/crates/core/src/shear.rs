//! Shear profiles `u(y)`, their action `u ∂x` on spectral fields, and
//! flatness detection at critical points.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{SpectralField1D, SpectralField2D};

/// Resolution used for the named analytic profiles; all of them are
/// trigonometric polynomials of degree ≤ 3.
const NAMED_NY: usize = 64;

/// Samples of the interpolant used to locate extrema and critical points.
const FINE_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Flatness {
    /// Order of the first nonvanishing derivative, maximised over critical points.
    pub m: u32,
    pub critical_points: Vec<f64>,
    /// Per-critical-point orders, aligned with `critical_points`.
    pub orders: Vec<u32>,
    pub c1: f64,
}

/// A real shear `u(y)` on `[-π, π)`, held as Fourier coefficients.
#[derive(Debug, Clone)]
pub struct ShearProfile {
    name: String,
    coeffs: SpectralField1D,
    /// `(l, û(l))` for every coefficient above round-off, `|l| < ny/2`.
    band: Vec<(i64, Complex64)>,
    flatness: Option<Flatness>,
    delta0: Option<f64>,
}

impl ShearProfile {
    pub fn from_coeffs(name: impl Into<String>, coeffs: SpectralField1D) -> Self {
        let ny = coeffs.ny();
        let nyq = -((ny / 2) as i64);
        let scale = coeffs.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
        // a real profile: keep û(-l) = conj û(l) bit for bit
        let band = coeffs
            .modes()
            .filter(|&(l, c)| l != nyq && c.norm() > 1e-15 * scale)
            .map(|(l, c)| match l.cmp(&0) {
                std::cmp::Ordering::Less => (l, coeffs.get(-l).conj()),
                std::cmp::Ordering::Equal => (l, Complex64::new(c.re, 0.0)),
                std::cmp::Ordering::Greater => (l, c),
            })
            .collect();
        Self {
            name: name.into(),
            coeffs,
            band,
            flatness: None,
            delta0: None,
        }
    }

    pub fn from_fn(name: impl Into<String>, ny: usize, f: impl Fn(f64) -> f64) -> Self {
        Self::from_coeffs(name, SpectralField1D::from_fn(ny, f))
    }

    /// `zero`, `cos` (Kolmogorov), `cos2`, `sin`, `sin3`, or `const`.
    pub fn named(name: &str) -> Result<Self> {
        let f: fn(f64) -> f64 = match name {
            "zero" => |_| 0.0,
            "const" => |_| 1.0,
            "cos" => f64::cos,
            "cos2" => |y| (2.0 * y).cos(),
            "sin" => f64::sin,
            "sin3" => |y| y.sin().powi(3),
            other => {
                return Err(Error::Parameter(format!(
                    "unknown shear profile '{other}' (expected zero, const, cos, cos2, sin, sin3)"
                )))
            }
        };
        Ok(Self::from_fn(name, NAMED_NY, f))
    }

    pub fn kolmogorov() -> Self {
        Self::named("cos").unwrap()
    }

    pub fn zero() -> Self {
        Self::named("zero").unwrap()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coeffs(&self) -> &SpectralField1D {
        &self.coeffs
    }

    /// `û(l)`, zero outside the retained band.
    pub fn coeff(&self, l: i64) -> Complex64 {
        self.band
            .iter()
            .find(|&&(m, _)| m == l)
            .map_or(Complex64::new(0.0, 0.0), |&(_, c)| c)
    }

    /// Nonzero Fourier coefficients as `(l, û(l))`.
    pub fn band(&self) -> &[(i64, Complex64)] {
        &self.band
    }

    pub fn bandwidth(&self) -> i64 {
        self.band.iter().map(|(l, _)| l.abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.band.is_empty()
    }

    /// `d^j u / dy^j` at `y`, evaluated from the Fourier series.
    pub fn derivative(&self, j: u32, y: f64) -> f64 {
        self.band
            .iter()
            .map(|&(l, c)| {
                let il = Complex64::new(0.0, l as f64).powu(j);
                (c * il * Complex64::from_polar(1.0, l as f64 * y)).re
            })
            .sum()
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.derivative(0, y)
    }

    /// Samples on the nodes `y_j = -π + 2πj/ny`.
    pub fn samples(&self, ny: usize) -> Vec<f64> {
        (0..ny)
            .map(|j| self.eval(-PI + 2.0 * PI * j as f64 / ny as f64))
            .collect()
    }

    /// `(min u, max u)` on a fine sampling of the interpolant.
    pub fn range(&self) -> (f64, f64) {
        self.samples(FINE_POINTS)
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    pub fn max_abs(&self) -> f64 {
        let (lo, hi) = self.range();
        lo.abs().max(hi.abs())
    }

    pub fn flatness(&self) -> Option<&Flatness> {
        self.flatness.as_ref()
    }

    pub fn delta0(&self) -> Option<f64> {
        self.delta0
    }

    pub fn with_delta0(mut self, delta0: f64) -> Self {
        self.delta0 = Some(delta0);
        self
    }

    /// Runs [`detect_flatness_order`] and stores the result on the profile.
    pub fn with_detected_flatness(mut self) -> Result<Self> {
        self.flatness = Some(detect_flatness_order(&self)?);
        Ok(self)
    }

    /// `u(y) ∂x n` with the y-convolution truncated to `|l| ≤ ny/2 - 1`
    /// (no wraparound), so it agrees entry for entry with the per-`k` mode
    /// operator. The unpaired row `k = -nx/2` and column `l = -ny/2` stay zero.
    pub fn advect(&self, n: &SpectralField2D) -> SpectralField2D {
        let grid = *n.grid();
        let mut out = SpectralField2D::zeros(grid);
        let lmax = (grid.ny() / 2 - 1) as i64;
        let kmax = (grid.nx() / 2 - 1) as i64;
        let src = n.coeffs();
        let ny = grid.ny();
        let dst = out.coeffs_mut();
        for k in -kmax..=kmax {
            if k == 0 {
                continue;
            }
            let row = grid.index(k, 0);
            let ik = Complex64::new(0.0, k as f64);
            for l in -lmax..=lmax {
                let mut acc = Complex64::new(0.0, 0.0);
                for &(d, c) in &self.band {
                    let lp = l - d;
                    if (-lmax..=lmax).contains(&lp) {
                        acc += c * src[row + lp.rem_euclid(ny as i64) as usize];
                    }
                }
                dst[row + l.rem_euclid(ny as i64) as usize] = ik * acc;
            }
        }
        out
    }
}

/// Locates critical points of `u` and the order of the first nonvanishing
/// derivative at each; `m` is the largest such order.
///
/// Candidates are zeros of `u^{(j)}`, `j = 1..=6`, bracketed on a fine grid and
/// refined by bisection; a candidate is kept when `|u'|` is below the
/// vanishing threshold `1e-8 ‖u‖∞`. Zeros of higher derivatives are needed
/// because a degenerate critical point (e.g. `sin³ y` at 0) need not be a sign
/// change of `u'`.
pub fn detect_flatness_order(u: &ShearProfile) -> Result<Flatness> {
    let scale = u.max_abs();
    // offset the scan so that roots at ±π or 0 fall strictly inside a cell
    let ys: Vec<f64> = (0..=FINE_POINTS)
        .map(|i| -PI + 2.0 * PI * (i as f64 + 0.371) / FINE_POINTS as f64)
        .collect();
    let max_slope = ys.iter().map(|&y| u.derivative(1, y).abs()).fold(0.0, f64::max);
    if u.is_zero() || max_slope <= 1e-12 * scale.max(1e-300) {
        return Err(Error::DegenerateProfile(format!(
            "profile '{}' is constant",
            u.name()
        )));
    }
    let thr = 1e-8 * scale;

    let mut points: Vec<f64> = Vec::new();
    for j in 1..=6 {
        let vals: Vec<f64> = ys.iter().map(|&y| u.derivative(j, y)).collect();
        for i in 0..FINE_POINTS {
            let root = if vals[i] == 0.0 {
                Some(ys[i])
            } else if vals[i] * vals[i + 1] < 0.0 {
                Some(bisect(|y| u.derivative(j, y), ys[i], ys[i + 1], vals[i]))
            } else {
                None
            };
            if let Some(y) = root {
                let y = wrap(y);
                if u.derivative(1, y).abs() <= thr && !points.iter().any(|&p| periodic_dist(p, y) < 1e-3) {
                    points.push(y);
                }
            }
        }
    }
    points.sort_by(f64::total_cmp);

    let mut orders = Vec::with_capacity(points.len());
    for &y in &points {
        let order = (2..=12)
            .find(|&j| u.derivative(j, y).abs() > thr)
            .ok_or_else(|| {
                Error::DegenerateProfile(format!(
                    "all derivatives up to order 12 vanish at y = {y:.6}"
                ))
            })?;
        orders.push(order);
    }
    let m = orders.iter().copied().max().ok_or_else(|| {
        Error::DegenerateProfile(format!("no critical point found for '{}'", u.name()))
    })?;

    // c₁ from shells around each critical point, with λ = u(y_c)
    let mut c1 = f64::INFINITY;
    for &y in &points {
        let uc = u.eval(y);
        for s in 0..8 {
            let delta = 0.2 * 0.5f64.powi(s);
            for side in [-1.0, 1.0] {
                let ratio = (u.eval(y + side * delta) - uc).abs() / delta.powi(m as i32);
                c1 = c1.min(ratio);
            }
        }
    }

    Ok(Flatness {
        m,
        critical_points: points,
        orders,
        c1,
    })
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let sa = fa.signum();
    for _ in 0..80 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == sa {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn wrap(y: f64) -> f64 {
    (y + PI).rem_euclid(2.0 * PI) - PI
}

fn periodic_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    #[test]
    fn named_profiles_have_expected_band() {
        let u = ShearProfile::kolmogorov();
        assert_eq!(u.bandwidth(), 1);
        assert!((u.coeff(1).re - 0.5).abs() < 1e-15);
        assert!((u.coeff(-1).re - 0.5).abs() < 1e-15);
        assert_eq!(u.coeff(2), Complex64::new(0.0, 0.0));
        assert_eq!(ShearProfile::named("sin3").unwrap().bandwidth(), 3);
        assert!(ShearProfile::named("tanh").is_err());
        assert_eq!(u.range(), (-1.0, 1.0));
    }

    #[test]
    fn advection_matches_collocation_for_low_modes() {
        let g = TorusGrid::square(32).unwrap();
        let u = ShearProfile::kolmogorov();
        let n = SpectralField2D::from_fn(g, |x, y| (x + 2.0 * y).sin() + (3.0 * x).cos() * y.sin());
        let direct = SpectralField2D::from_fn(g, |x, y| {
            y.cos() * ((x + 2.0 * y).cos() - 3.0 * (3.0 * x).sin() * y.sin())
        });
        assert!(u.advect(&n).rel_l2_distance(&direct) < 1e-13);
    }

    #[test]
    fn flatness_examples() {
        for (name, m) in [("cos", 2), ("cos2", 2), ("sin3", 3), ("sin", 2)] {
            let f = detect_flatness_order(&ShearProfile::named(name).unwrap()).unwrap();
            assert_eq!(f.m, m, "{name}");
        }
        let cos = detect_flatness_order(&ShearProfile::kolmogorov()).unwrap();
        assert_eq!(cos.critical_points.len(), 2);
        assert!(cos.critical_points.iter().any(|y| y.abs() < 1e-12));
        assert!(cos.c1 > 0.0 && cos.c1 < 0.5);
    }

    #[test]
    fn constant_profile_is_degenerate() {
        for name in ["zero", "const"] {
            let err = detect_flatness_order(&ShearProfile::named(name).unwrap());
            assert!(matches!(err, Err(Error::DegenerateProfile(_))));
        }
    }
}
