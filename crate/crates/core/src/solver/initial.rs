//! Initial data generators. All return real fields with `∫n` equal to the
//! requested mass.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{SpectralField2D, TorusGrid};

fn check_mass(mass: f64) -> Result<()> {
    if mass.is_finite() && mass > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("mass {mass} must be positive")))
    }
}

/// Rescale so that `∫n = mass`.
fn set_mass(mut f: SpectralField2D, mass: f64) -> SpectralField2D {
    let target = mass / (4.0 * PI * PI);
    let scale = target / f.mean();
    for c in f.coeffs_mut() {
        *c *= scale;
    }
    f
}

/// Periodized Gaussian `Σ_m exp(-|x - c - 2πm|² / 2w²)` scaled to `mass`.
pub fn gaussian_bump(grid: TorusGrid, mass: f64, center: (f64, f64), width: f64) -> Result<SpectralField2D> {
    check_mass(mass)?;
    if !(width > 0.0 && width < PI) {
        return Err(Error::Parameter(format!("bump width {width} must lie in (0, π)")));
    }
    let images = (-3..=3).map(|m| 2.0 * PI * m as f64).collect::<Vec<_>>();
    let bump = |d: f64| images.iter().map(|s| (-(d - s).powi(2) / (2.0 * width * width)).exp()).sum::<f64>();
    // separable, so the product of two 1D periodizations is the 2D one
    let f = SpectralField2D::from_fn(grid, |x, y| bump(x - center.0) * bump(y - center.1));
    let mut f = set_mass(f, mass);
    f.symmetrize();
    Ok(f)
}

/// `M/4π² + a cos(kx + ly)`.
pub fn single_mode(grid: TorusGrid, k: i64, l: i64, amplitude: f64, mass: f64) -> Result<SpectralField2D> {
    check_mass(mass)?;
    if !grid.contains(k, l) || !grid.contains(-k, -l) {
        return Err(Error::Parameter(format!("mode ({k}, {l}) is not on the grid")));
    }
    let mut f = SpectralField2D::constant(grid, mass / (4.0 * PI * PI));
    if k != 0 || l != 0 {
        let half = Complex64::new(0.5 * amplitude, 0.0);
        f.set(k, l, half);
        f.set(-k, -l, half);
    }
    Ok(f)
}

/// Mean `M/4π²` plus random modes with `0 < max(|k|, |l|) ≤ band`, weighted
/// by `(1 + k² + l²)^{-1}` and scaled so the fluctuation has sup norm
/// `amplitude` on the grid.
pub fn random_band(grid: TorusGrid, band: i64, amplitude: f64, mass: f64, seed: u64) -> Result<SpectralField2D> {
    check_mass(mass)?;
    if band < 1 || !grid.contains(band, band) {
        return Err(Error::Parameter(format!("band {band} does not fit the grid")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField2D::zeros(grid);
    for k in 0..=band {
        for l in -band..=band {
            if k == 0 && l <= 0 {
                continue;
            }
            let w = 1.0 / (1.0 + (k * k + l * l) as f64);
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * w;
            f.set(k, l, c);
            f.set(-k, -l, c.conj());
        }
    }
    let sup = f.to_physical().iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut f = f.scaled(amplitude / sup);
    f.set(0, 0, Complex64::new(mass / (4.0 * PI * PI), 0.0));
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_has_target_mass_and_is_nonnegative() {
        let g = TorusGrid::square(64).unwrap();
        let f = gaussian_bump(g, 20.0, (0.0, PI / 2.0), 0.2).unwrap();
        assert!((4.0 * PI * PI * f.mean() - 20.0).abs() < 1e-8 * 20.0);
        let s = f.to_physical();
        assert!(s.iter().all(|&v| v >= -1e-12));
        // near the peak the bump is the planar Gaussian of that mass
        let peak = s.iter().copied().fold(0.0, f64::max);
        let planar = 20.0 / (2.0 * PI * 0.04);
        assert!((peak - planar).abs() / planar < 1e-6);
    }

    #[test]
    fn periodized_bump_is_smooth_across_the_boundary() {
        let g = TorusGrid::square(64).unwrap();
        let f = gaussian_bump(g, 1.0, (-PI, 0.0), 0.5).unwrap();
        let s = f.to_physical();
        // row x = -π and the row just inside x = π see the same bump
        let a = s[g.ny() / 2];
        let b = s[(g.nx() - 1) * g.ny() + g.ny() / 2];
        let c = s[g.ny() + g.ny() / 2];
        assert!((b - c).abs() < 1e-12 * a);
    }

    #[test]
    fn random_band_is_seeded_and_scaled() {
        let g = TorusGrid::square(32).unwrap();
        let a = random_band(g, 4, 0.5, 10.0, 7).unwrap();
        let b = random_band(g, 4, 0.5, 10.0, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.hermitian_defect() == 0.0);
        let s = a.to_physical();
        let mean = a.mean();
        let sup = s.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        assert!((sup - 0.5).abs() < 1e-12);
        assert!((4.0 * PI * PI * mean - 10.0).abs() < 1e-12);
    }

    #[test]
    fn single_mode_rejects_off_grid() {
        let g = TorusGrid::square(16).unwrap();
        assert!(single_mode(g, 8, 0, 1.0, 1.0).is_err());
        let f = single_mode(g, 2, -1, 0.5, 4.0 * PI * PI).unwrap();
        assert!((f.to_physical()[0] - (1.0 + 0.5 * (-2.0 * PI + PI).cos())).abs() < 1e-12);
    }
}
