//! Differential operators, projections and products on spectral fields.

use num_complex::Complex64;

use super::fft;
use super::field::{SpectralField1D, SpectralField2D};
use super::multiplier::radial_power;
use crate::error::{check_alpha, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `(-Δ)^{α/2} f`, symbol `(k² + l²)^{α/2}`.
pub fn frac_laplacian(f: &SpectralField2D, alpha: f64) -> Result<SpectralField2D> {
    check_alpha(alpha)?;
    Ok(frac_power(f, alpha))
}

/// `Λ^s f` for any real `s`; the mean mode maps to zero, so negative powers
/// act as mean-zero inverses.
pub fn frac_power(f: &SpectralField2D, s: f64) -> SpectralField2D {
    f.map_modes(|k, l, c| c * radial_power(k, l, s))
}

/// `(-∂_yy)^{α/2}` on a function of `y`.
pub fn frac_laplacian_1d(f: &SpectralField1D, alpha: f64) -> Result<SpectralField1D> {
    check_alpha(alpha)?;
    Ok(frac_power_1d(f, alpha))
}

/// `|∂_y|^s`, zero on the mean.
pub fn frac_power_1d(f: &SpectralField1D, s: f64) -> SpectralField1D {
    f.map_modes(|l, c| c * radial_power(0, l, s))
}

/// `Λ_y^s` acting on the y-variable of a 2D field (symbol `|l|^s`, zero at `l = 0`).
pub fn frac_power_y(f: &SpectralField2D, s: f64) -> SpectralField2D {
    f.map_modes(|_, l, c| c * radial_power(0, l, s))
}

/// x-average `P₀ f`.
pub fn project_zero(f: &SpectralField2D) -> SpectralField1D {
    let ny = f.grid().ny();
    SpectralField1D::from_coeffs(f.coeffs()[..ny].to_vec()).expect("ny is even")
}

/// `P≠ f = f - P₀ f`.
pub fn project_nonzero(f: &SpectralField2D) -> SpectralField2D {
    let mut out = f.clone();
    let ny = f.grid().ny();
    out.coeffs_mut()[..ny].fill(Complex64::new(0.0, 0.0));
    out
}

/// `(-Δ)^{-1}` of the mean-removed field.
pub fn inv_laplacian_meanzero(f: &SpectralField2D) -> SpectralField2D {
    f.map_modes(|k, l, c| {
        if k == 0 && l == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            c / (k * k + l * l) as f64
        }
    })
}

pub fn ddx(f: &SpectralField2D) -> SpectralField2D {
    let nyq = -((f.grid().nx() / 2) as i64);
    f.map_modes(|k, _, c| if k == nyq { Complex64::new(0.0, 0.0) } else { I * k as f64 * c })
}

pub fn ddy(f: &SpectralField2D) -> SpectralField2D {
    let nyq = -((f.grid().ny() / 2) as i64);
    f.map_modes(|_, l, c| if l == nyq { Complex64::new(0.0, 0.0) } else { I * l as f64 * c })
}

pub fn ddy_1d(f: &SpectralField1D) -> SpectralField1D {
    let nyq = -((f.ny() / 2) as i64);
    f.map_modes(|l, c| if l == nyq { Complex64::new(0.0, 0.0) } else { I * l as f64 * c })
}

pub fn grad(f: &SpectralField2D) -> (SpectralField2D, SpectralField2D) {
    (ddx(f), ddy(f))
}

pub fn div(vx: &SpectralField2D, vy: &SpectralField2D) -> Result<SpectralField2D> {
    vx.check_same_grid(vy)?;
    Ok(&ddx(vx) + &ddy(vy))
}

#[inline]
fn outside_two_thirds(k: i64, n: usize) -> bool {
    3 * k.unsigned_abs() > n as u64
}

/// Two-thirds rule: zero every mode with `|k| > nx/3` or `|l| > ny/3`.
pub fn dealias(f: &SpectralField2D) -> SpectralField2D {
    let mut out = f.clone();
    dealias_in_place(&mut out);
    out
}

pub fn dealias_in_place(f: &mut SpectralField2D) {
    let grid = *f.grid();
    let coeffs = f.coeffs_mut();
    for (idx, k, l) in grid.modes() {
        if outside_two_thirds(k, grid.nx()) || outside_two_thirds(l, grid.ny()) {
            coeffs[idx] = Complex64::new(0.0, 0.0);
        }
    }
}

pub fn dealias_1d(f: &SpectralField1D) -> SpectralField1D {
    let n = f.ny();
    f.map_modes(|l, c| if outside_two_thirds(l, n) { Complex64::new(0.0, 0.0) } else { c })
}

/// Collocation product of the two-thirds-truncated factors, truncated again.
/// For band-limited inputs this is the exact product restricted to the
/// retained band.
pub fn dealiased_product(a: &SpectralField2D, b: &SpectralField2D) -> Result<SpectralField2D> {
    a.check_same_grid(b)?;
    let pa = dealias(a).to_physical_complex();
    let pb = dealias(b).to_physical_complex();
    let mut prod: Vec<Complex64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    fft::forward_2d(a.grid(), &mut prod);
    let mut out = SpectralField2D::from_coeffs(*a.grid(), prod)?;
    dealias_in_place(&mut out);
    Ok(out)
}

pub fn dealiased_product_1d(a: &SpectralField1D, b: &SpectralField1D) -> Result<SpectralField1D> {
    if a.ny() != b.ny() {
        return Err(Error::Shape(format!(
            "1D fields of length {} and {}",
            a.ny(),
            b.ny()
        )));
    }
    let pa = dealias_1d(a).to_physical();
    let pb = dealias_1d(b).to_physical();
    let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    Ok(dealias_1d(&SpectralField1D::from_physical(&prod)?))
}
