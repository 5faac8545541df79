//! The attractive kernel `B = ∇(-Δ)⁻¹(n - n̄)` and right-hand sides of the
//! rescaled equation
//!
//! `∂t n + u(y) ∂x n + ν Λ^α n + ν ∇·(n B(n)) = 0`,
//!
//! both assembled directly and split into x-average and remainder.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{check_alpha, Error, Result};
use crate::shear::ShearProfile;
use crate::spectral::{ops, SpectralField1D, SpectralField2D};

#[derive(Debug, Clone)]
pub struct KernelField {
    pub bx: SpectralField2D,
    pub by: SpectralField2D,
    /// `B₁(P₀ n)`, the y-component carried by the x-average.
    pub b1: SpectralField1D,
}

pub fn attractive_kernel(n: &SpectralField2D) -> KernelField {
    let phi = ops::inv_laplacian_meanzero(n);
    let (bx, by) = ops::grad(&phi);
    KernelField {
        bx,
        by,
        b1: kernel_b1(&ops::project_zero(n)),
    }
}

/// `B₁(n⁰) = ∂y(-∂yy)⁻¹(n⁰ - n̄)`; on mode `l ≠ 0` this is `i/l`.
pub fn kernel_b1(n0: &SpectralField1D) -> SpectralField1D {
    let nyq = -((n0.ny() / 2) as i64);
    n0.map_modes(|l, c| {
        if l == 0 || l == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0 / l as f64) * c
        }
    })
}

/// `B₂(n≠) = ∇(-Δ)⁻¹ n≠`; the input must carry no `k = 0` content.
pub fn kernel_b2(nneq: &SpectralField2D) -> Result<(SpectralField2D, SpectralField2D)> {
    check_nonzero_only(nneq)?;
    Ok(ops::grad(&ops::inv_laplacian_meanzero(nneq)))
}

pub(crate) fn check_nonzero_only(f: &SpectralField2D) -> Result<()> {
    let ny = f.grid().ny();
    let zero_col = f.coeffs()[..ny].iter().map(|c| c.norm()).fold(0.0, f64::max);
    if zero_col > 1e-14 * f.max_abs_coeff() {
        return Err(Error::Precondition(format!(
            "field has k = 0 content of size {zero_col:.3e}; expected nonzero modes only"
        )));
    }
    Ok(())
}

fn check_nu(nu: f64) -> Result<()> {
    if nu.is_finite() && nu > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("nu = {nu} must be positive")))
    }
}

/// `∇·(n B(n))` with dealiased products and a dealiased result.
pub fn aggregation_flux_divergence(n: &SpectralField2D) -> SpectralField2D {
    let b = attractive_kernel(n);
    let fx = ops::dealiased_product(n, &b.bx).expect("same grid");
    let fy = ops::dealiased_product(n, &b.by).expect("same grid");
    ops::div(&fx, &fy).expect("same grid")
}

/// `-u ∂x n - ν Λ^α n - ν ∇·(n B(n))`; the mean mode of the result is exactly zero.
pub fn nonlinear_rhs(
    n: &SpectralField2D,
    u: &ShearProfile,
    alpha: f64,
    nu: f64,
) -> Result<SpectralField2D> {
    check_alpha(alpha)?;
    check_nu(nu)?;
    let mut rhs = -&u.advect(n);
    rhs.axpy(-nu, &ops::frac_power(n, alpha));
    rhs.axpy(-nu, &aggregation_flux_divergence(n));
    Ok(rhs)
}

/// Right side of the x-averaged equation:
/// `-ν(-∂yy)^{α/2} n⁰ - ν ∂y(n⁰ B₁(n⁰)) - ν (∇·(n≠ B₂(n≠)))⁰`.
pub fn mode_rhs_zero(
    n0: &SpectralField1D,
    nneq: &SpectralField2D,
    alpha: f64,
    nu: f64,
) -> Result<SpectralField1D> {
    check_alpha(alpha)?;
    check_nu(nu)?;
    check_embedding(n0, nneq)?;
    let (b2x, b2y) = kernel_b2(nneq)?;
    let self_flux = ops::dealiased_product_1d(n0, &kernel_b1(n0))?;
    let cross = ops::div(
        &ops::dealiased_product(nneq, &b2x)?,
        &ops::dealiased_product(nneq, &b2y)?,
    )?;

    let mut rhs = ops::frac_power_1d(n0, alpha).scaled(-nu);
    rhs = &rhs - &ops::ddy_1d(&self_flux).scaled(nu);
    rhs = &rhs - &ops::project_zero(&cross).scaled(nu);
    Ok(rhs)
}

/// Right side of the remainder equation, term by term:
/// `-u∂x n≠ - νΛ^α n≠ - ν[∇n⁰·B₂ + ∂y n≠ B₁ + (∇·(n≠B₂))≠ - n⁰n≠ - n≠(n⁰ - n̄)]`.
pub fn mode_rhs_nonzero(
    n0: &SpectralField1D,
    nneq: &SpectralField2D,
    u: &ShearProfile,
    alpha: f64,
    nu: f64,
) -> Result<SpectralField2D> {
    check_alpha(alpha)?;
    check_nu(nu)?;
    check_embedding(n0, nneq)?;
    let grid = *nneq.grid();
    let (b2x, b2y) = kernel_b2(nneq)?;
    let b1 = kernel_b1(n0).to_2d(grid)?;
    let n0_2d = n0.to_2d(grid)?;
    let mut n0_fluct = n0_2d.clone();
    n0_fluct.set(0, 0, Complex64::new(0.0, 0.0));

    let grad_n0_b2 = ops::dealiased_product(&ops::ddy(&n0_2d), &b2y)?;
    let dy_nneq_b1 = ops::dealiased_product(&ops::ddy(nneq), &b1)?;
    let flux = ops::project_nonzero(&ops::div(
        &ops::dealiased_product(nneq, &b2x)?,
        &ops::dealiased_product(nneq, &b2y)?,
    )?);
    let n0_nneq = ops::dealiased_product(&n0_2d, nneq)?;
    let nneq_fluct = ops::dealiased_product(nneq, &n0_fluct)?;

    let mut bracket = &grad_n0_b2 + &dy_nneq_b1;
    bracket = &bracket + &flux;
    bracket = &bracket - &n0_nneq;
    bracket = &bracket - &nneq_fluct;

    let mut rhs = -&u.advect(nneq);
    rhs.axpy(-nu, &ops::frac_power(nneq, alpha));
    rhs.axpy(-nu, &bracket);
    Ok(rhs)
}

fn check_embedding(n0: &SpectralField1D, nneq: &SpectralField2D) -> Result<()> {
    if n0.ny() != nneq.grid().ny() {
        return Err(Error::Shape(format!(
            "zero mode has {} y-modes, remainder has {}",
            n0.ny(),
            nneq.grid().ny()
        )));
    }
    Ok(())
}

/// Collocation `L^p` norm on `T²`; `p = ∞` gives the sup norm.
fn lp_norm(f: &SpectralField2D, p: f64) -> f64 {
    let s = f.to_physical();
    if p.is_infinite() {
        return s.iter().map(|v| v.abs()).fold(0.0, f64::max);
    }
    (s.iter().map(|v| v.abs().powf(p)).sum::<f64>() * f.grid().cell_area()).powf(1.0 / p)
}

/// Empirical constants in the kernel estimates
/// `‖∂y B₁(n⁰)‖_p ≲ ‖n⁰‖_p`, `‖B₁(n⁰)‖∞ ≲ ‖n⁰‖₂`,
/// `‖∇B₂(n≠)‖_p ≲ ‖n≠‖_p` and `‖B₂(n≠)‖∞ ≲ ‖n≠‖₄`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelBoundRatios {
    /// `(p, ‖∂y B₁(n⁰)‖_p / ‖n⁰‖_p)` for `p = 1, 2, 4, ∞`.
    pub dy_b1: Vec<(f64, f64)>,
    pub b1_linf: f64,
    /// `(p, (‖∂x B₂‖_p + ‖∂y B₂‖_p) / ‖n≠‖_p)` for `p = 2, 4`.
    pub grad_b2: Vec<(f64, f64)>,
    pub b2_linf: f64,
}

pub fn kernel_bound_ratios(n: &SpectralField2D) -> Result<KernelBoundRatios> {
    let grid = *n.grid();
    let n0 = ops::project_zero(n);
    let n0_2d = n0.to_2d(grid)?;
    let nneq = ops::project_nonzero(n);
    let b1 = kernel_b1(&n0).to_2d(grid)?;
    let dy_b1 = ops::ddy(&b1);
    let (b2x, b2y) = kernel_b2(&nneq)?;
    let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };

    let dy_b1 = [1.0, 2.0, 4.0, f64::INFINITY]
        .into_iter()
        .map(|p| (p, ratio(lp_norm(&dy_b1, p), lp_norm(&n0_2d, p))))
        .collect();
    let grad_b2 = [2.0, 4.0]
        .into_iter()
        .map(|p| {
            let g = lp_norm(&ops::ddx(&b2x), p) + lp_norm(&ops::ddy(&b2x), p)
                + lp_norm(&ops::ddx(&b2y), p)
                + lp_norm(&ops::ddy(&b2y), p);
            (p, ratio(g, lp_norm(&nneq, p)))
        })
        .collect();
    let b2_sup = lp_norm(&b2x, f64::INFINITY).max(lp_norm(&b2y, f64::INFINITY));
    Ok(KernelBoundRatios {
        dy_b1,
        b1_linf: ratio(lp_norm(&b1, f64::INFINITY), lp_norm(&n0_2d, 2.0)),
        grad_b2,
        b2_linf: ratio(b2_sup, lp_norm(&nneq, 4.0)),
    })
}
