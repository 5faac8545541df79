//! Pseudospectral bound `Ψ(M) = inf_λ σ_min(M - iλ)` along the imaginary
//! axis, its scaling fits, and the semigroup bound `‖e^{-tM}‖ ≤ e^{-tΨ + π/2}`.

use std::f64::consts::FRAC_PI_2;

use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::{build_mode_operator, semigroup_norm, smallest_singular_value, ModeOperator};
use crate::shear::ShearProfile;

/// Largest truncation handled by dense SVD; beyond it `σ_min` comes from
/// inverse iteration on an LU factorisation.
pub const DENSE_SVD_MAX_L: usize = 256;

pub fn sigma_min(op: &ModeOperator, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() {
        return Err(Error::Parameter(format!("shift λ = {lambda} is not finite")));
    }
    let a = op.shifted(lambda);
    let s = if op.lmax() <= DENSE_SVD_MAX_L {
        smallest_singular_value(a.as_ref())?
    } else {
        sigma_min_inverse_iteration(&a)?
    };
    if !s.is_finite() {
        return Err(Error::Numerical(format!("σ_min at λ = {lambda} is not finite")));
    }
    Ok(s)
}

/// `1/‖A⁻¹‖₂` by block inverse iteration on `A^{-H} A^{-1}` with a
/// Rayleigh–Ritz estimate. A block is needed because the smallest singular
/// values of these operators come in nearly degenerate even/odd pairs.
fn sigma_min_inverse_iteration(a: &Mat<c64>) -> Result<f64> {
    const BLOCK: usize = 6;
    let n = a.nrows();
    let b = BLOCK.min(n);
    let lu = a.partial_piv_lu();
    let start = Mat::from_fn(n, b, |i, j| {
        let t = (i * (j + 1)) as f64 + 0.37 * j as f64;
        c64::new((1.3 * t).sin() + 0.1, (0.7 * t + j as f64).cos())
    });
    let mut x = start.qr().compute_thin_Q();
    let mut est = 0.0;
    for _ in 0..2000 {
        let y = lu.solve(&x);
        let gain = y
            .singular_values()
            .map_err(|e| Error::Numerical(format!("Ritz SVD failed: {e:?}")))?[0];
        if !gain.is_finite() {
            return Err(Error::Numerical("inverse iteration broke down (singular shift?)".into()));
        }
        if (gain - est).abs() <= 1e-14 * gain {
            return Ok(1.0 / gain);
        }
        est = gain;
        x = lu.solve_adjoint(&y).qr().compute_thin_Q();
    }
    Ok(1.0 / est)
}

#[derive(Debug, Clone, Serialize)]
pub struct PsiResult {
    pub psi: f64,
    pub lambda_star: f64,
    pub k: i64,
    pub nu: f64,
    pub alpha: f64,
    pub lmax: usize,
    /// Minimum over the coarse λ grid, before refinement.
    pub coarse_psi: f64,
    /// `Ψ` recomputed at truncation `2L` around `λ*`, when requested.
    pub psi_doubled: Option<f64>,
    pub converged: bool,
    pub trace: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct PsiOptions {
    pub grid_points: usize,
    /// Golden-section stops when the bracket is this fraction of its start.
    pub rel_width: f64,
    pub check_truncation: bool,
    /// Accepted `|Ψ(L) - Ψ(2L)| / Ψ(2L)`.
    pub truncation_tol: f64,
}

impl Default for PsiOptions {
    fn default() -> Self {
        Self {
            grid_points: 201,
            rel_width: 1e-4,
            check_truncation: true,
            truncation_tol: 1e-4,
        }
    }
}

/// The λ window `k·[min u - margin, max u + margin]`, `margin = ν|k|^α + 0.1(max u - min u)`.
pub fn search_interval(u: &ShearProfile, k: i64, nu: f64, alpha: f64) -> (f64, f64) {
    let (lo, hi) = u.range();
    let margin = nu * (k.abs() as f64).powf(alpha) + 0.1 * (hi - lo);
    let a = k as f64 * (lo - margin);
    let b = k as f64 * (hi + margin);
    (a.min(b), a.max(b))
}

/// Golden-section minimisation of `f` on `[a, b]`; returns the best point
/// evaluated and appends every evaluation to `trace`.
fn golden_section(
    f: &impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    rel_width: f64,
    trace: &mut Vec<(f64, f64)>,
) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let stop = rel_width * (b - a);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    trace.push((c, fc));
    trace.push((d, fd));
    while b - a > stop {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
            trace.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
            trace.push((d, fd));
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

pub fn psi_bound(u: &ShearProfile, k: i64, nu: f64, alpha: f64, lmax: usize) -> Result<PsiResult> {
    psi_bound_with(u, k, nu, alpha, lmax, &PsiOptions::default())
}

/// Grid search over the λ window, golden-section refinement around the
/// three best grid points, and optionally a local re-solve at `2L`.
pub fn psi_bound_with(
    u: &ShearProfile,
    k: i64,
    nu: f64,
    alpha: f64,
    lmax: usize,
    opts: &PsiOptions,
) -> Result<PsiResult> {
    if opts.grid_points < 3 {
        return Err(Error::Parameter("λ grid needs at least 3 points".into()));
    }
    let op = build_mode_operator(u, k, nu, alpha, lmax)?;
    let sigma = |lam: f64| sigma_min(&op, lam);
    let (a, b) = search_interval(u, k, nu, alpha);
    let n = opts.grid_points;
    let h = (b - a) / (n - 1) as f64;
    let mut trace = Vec::with_capacity(n + 64);
    for i in 0..n {
        let lam = a + (b - a) * i as f64 / (n - 1) as f64;
        trace.push((lam, sigma(lam)?));
    }
    let (mut lambda_star, coarse_psi) = trace
        .iter()
        .copied()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty grid");
    let mut psi = coarse_psi;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| trace[i].1.total_cmp(&trace[j].1));
    for &i in order.iter().take(3) {
        let lo = trace[i].0 - h;
        let hi = trace[i].0 + h;
        let (lam, s) = golden_section(&sigma, lo, hi, opts.rel_width, &mut trace)?;
        if s < psi {
            psi = s;
            lambda_star = lam;
        }
    }

    let mut psi_doubled = None;
    let mut converged = true;
    if opts.check_truncation {
        let op2 = build_mode_operator(u, k, nu, alpha, 2 * lmax)?;
        let sigma2 = |lam: f64| sigma_min(&op2, lam);
        let mut scratch = Vec::new();
        let at_star = sigma2(lambda_star)?;
        let (_, s2) = golden_section(&sigma2, lambda_star - h, lambda_star + h, opts.rel_width, &mut scratch)?;
        let p2 = at_star.min(s2);
        converged = (psi - p2).abs() <= opts.truncation_tol * p2;
        psi_doubled = Some(p2);
    }

    Ok(PsiResult {
        psi,
        lambda_star,
        k,
        nu,
        alpha,
        lmax,
        coarse_psi,
        psi_doubled,
        converged,
        trace,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GearhartPrussReport {
    pub psi: f64,
    /// `(t, ‖e^{-tM}‖, e^{-tΨ + π/2})`.
    pub samples: Vec<(f64, f64, f64)>,
    /// Largest `‖e^{-tM}‖ / e^{-tΨ + π/2}`.
    pub max_ratio: f64,
    pub violations: Vec<f64>,
}

impl GearhartPrussReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `‖e^{-tM}‖ ≤ e^{-tΨ + π/2}` with relative slack `1e-6`.
pub fn gearhart_pruss_with(op: &ModeOperator, psi: f64, times: &[f64]) -> Result<GearhartPrussReport> {
    let mut samples = Vec::with_capacity(times.len());
    let mut max_ratio: f64 = 0.0;
    let mut violations = Vec::new();
    for &t in times {
        let norm = semigroup_norm(op, t)?;
        let bound = (-t * psi + FRAC_PI_2).exp();
        max_ratio = max_ratio.max(norm / bound);
        if norm > bound * (1.0 + 1e-6) {
            violations.push(t);
        }
        samples.push((t, norm, bound));
    }
    Ok(GearhartPrussReport {
        psi,
        samples,
        max_ratio,
        violations,
    })
}

pub fn gearhart_pruss_check(
    u: &ShearProfile,
    k: i64,
    nu: f64,
    alpha: f64,
    lmax: usize,
    times: &[f64],
) -> Result<GearhartPrussReport> {
    let psi = psi_bound(u, k, nu, alpha, lmax)?.psi;
    gearhart_pruss_with(&build_mode_operator(u, k, nu, alpha, lmax)?, psi, times)
}

/// Power-law fit `Ψ ≈ C ν^a |k|^b`; only parameters that vary get an exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub exponent_nu: Option<f64>,
    pub exponent_k: Option<f64>,
    pub prefactor: f64,
    pub residual: f64,
}

/// Least squares on `ln Ψ = ln C + a ln ν + b ln|k|` over points `(ν, k, Ψ)`.
pub fn power_law_fit(points: &[(f64, f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 4 {
        return Err(Error::Data(format!(
            "scaling fit needs at least 4 results, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !(p.0 > 0.0 && p.1 > 0.0 && p.2 > 0.0)) {
        return Err(Error::Data(format!("nonpositive entry in scaling point {p:?}")));
    }
    let varies = |f: fn(&(f64, f64, f64)) -> f64| {
        let first = f(&points[0]);
        points.iter().any(|p| (f(p) - first).abs() > 1e-14 * first.abs())
    };
    let (vary_nu, vary_k) = (varies(|p| p.0), varies(|p| p.1));
    if !vary_nu && !vary_k {
        return Err(Error::Data("scaling fit needs ν or k to vary".into()));
    }
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let mut r = vec![1.0];
            if vary_nu {
                r.push(p.0.ln());
            }
            if vary_k {
                r.push(p.1.ln());
            }
            r
        })
        .collect();
    let ys: Vec<f64> = points.iter().map(|p| p.2.ln()).collect();
    let m = rows[0].len();
    let a = Mat::<f64>::from_fn(rows.len(), m, |i, j| rows[i][j]);
    let y = Mat::<f64>::from_fn(rows.len(), 1, |i, _| ys[i]);
    let ata = a.transpose() * &a;
    let aty = a.transpose() * &y;
    let coef = ata.partial_piv_lu().solve(&aty);
    let mut idx = 1;
    let mut take = |on: bool| {
        on.then(|| {
            idx += 1;
            coef[(idx - 1, 0)]
        })
    };
    let exponent_nu = take(vary_nu);
    let exponent_k = take(vary_k);
    let rss: f64 = (0..rows.len())
        .map(|i| {
            let pred: f64 = (0..m).map(|j| rows[i][j] * coef[(j, 0)]).sum();
            (ys[i] - pred).powi(2)
        })
        .sum();
    Ok(ScalingFit {
        exponent_nu,
        exponent_k,
        prefactor: coef[(0, 0)].exp(),
        residual: (rss / rows.len() as f64).sqrt(),
    })
}

pub fn psi_scaling_fit(results: &[PsiResult]) -> Result<ScalingFit> {
    let pts: Vec<(f64, f64, f64)> = results
        .iter()
        .map(|r| (r.nu, r.k.abs() as f64, r.psi))
        .collect();
    power_law_fit(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> PsiOptions {
        PsiOptions {
            grid_points: 41,
            check_truncation: false,
            ..PsiOptions::default()
        }
    }

    #[test]
    fn diagonal_sigma_min() {
        let (nu, alpha, k) = (0.01, 1.5, 2);
        let op = build_mode_operator(&ShearProfile::zero(), k, nu, alpha, 8).unwrap();
        let d0 = nu * 2f64.powf(alpha);
        assert!((sigma_min(&op, 0.0).unwrap() - d0).abs() < 1e-15);
        let lam = 0.3;
        assert!((sigma_min(&op, lam).unwrap() - (d0 * d0 + lam * lam).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn inverse_iteration_agrees_with_svd() {
        let op = build_mode_operator(&ShearProfile::kolmogorov(), 1, 1e-3, 1.5, 40).unwrap();
        for lam in [0.0, 0.4, 0.97] {
            let a = op.shifted(lam);
            let dense = smallest_singular_value(a.as_ref()).unwrap();
            let inv = sigma_min_inverse_iteration(&a).unwrap();
            assert!((dense - inv).abs() <= 1e-9 * dense, "{dense} {inv}");
        }
    }

    #[test]
    fn zero_shear_psi_is_diffusion_rate() {
        let r = psi_bound_with(&ShearProfile::zero(), 3, 0.02, 1.2, 8, &quick()).unwrap();
        let exact = 0.02 * 3f64.powf(1.2);
        assert!((r.psi - exact).abs() <= 1e-12 * exact);
        assert!(r.lambda_star.abs() < 1e-12);
    }

    #[test]
    fn refined_psi_never_exceeds_trace() {
        let r = psi_bound_with(&ShearProfile::kolmogorov(), 1, 1e-2, 1.5, 32, &quick()).unwrap();
        assert!(r.psi <= r.coarse_psi);
        assert!(r.trace.iter().all(|&(_, s)| r.psi <= s));
        let upper = 1e-2 * (1.0 + 32f64 * 32.0).powf(0.75);
        assert!(r.psi <= upper);
    }

    #[test]
    fn shift_inside_range_of_shear_lowers_sigma() {
        let op = build_mode_operator(&ShearProfile::kolmogorov(), 1, 1e-3, 1.5, 64).unwrap();
        let s0 = sigma_min(&op, 0.0).unwrap();
        let s5 = sigma_min(&op, 0.5).unwrap();
        assert!(s0.is_finite() && s5.is_finite());
        assert!(s5 < s0, "σ(0.5) = {s5}, σ(0) = {s0}");
    }

    #[test]
    fn synthetic_power_law() {
        let pts: Vec<(f64, f64, f64)> = [1e-2, 1e-3, 1e-4, 1e-5]
            .iter()
            .map(|&nu: &f64| (nu, 1.0, 2.0 * nu.powf(0.5)))
            .collect();
        let fit = power_law_fit(&pts).unwrap();
        assert!((fit.exponent_nu.unwrap() - 0.5).abs() < 1e-10);
        assert!((fit.prefactor - 2.0).abs() < 1e-10);
        assert_eq!(fit.exponent_k, None);
        assert!(matches!(power_law_fit(&pts[..3]), Err(Error::Data(_))));
    }

    #[test]
    fn gearhart_pruss_diagonal_case() {
        let op = build_mode_operator(&ShearProfile::zero(), 1, 0.05, 1.5, 8).unwrap();
        let rep = gearhart_pruss_with(&op, 0.05, &[0.0, 1.0, 10.0, 100.0]).unwrap();
        assert!(rep.holds());
        assert!((rep.samples[0].2 - FRAC_PI_2.exp()).abs() < 1e-12);
        assert!((rep.max_ratio - (-FRAC_PI_2).exp()).abs() < 1e-12);
    }
}
