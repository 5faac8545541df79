//! The per-x-mode operator `L_k = ν(k² - ∂yy)^{α/2} + ik u(y)` on a
//! truncated set of y-modes, its semigroup, decay-rate fits, and the
//! commutator identity relating `S_t ∂y f` to `Λ_y^{α/2} S_t Λ_y^{-α/2} ∂y f`.

use std::num::NonZeroUsize;

use faer::{c64, Mat, MatRef};
use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::error::{check_alpha, Error, Result};
use crate::expm::expm;
use crate::kernels::check_nonzero_only;
use crate::shear::ShearProfile;
use crate::spectral::{ops, radial_power, SpectralField2D};

/// Dense matrix of `L_k` on y-modes `l = -L ..= L` (row `i` holds `l = i - L`).
#[derive(Debug, Clone)]
pub struct ModeOperator {
    k: i64,
    nu: f64,
    alpha: f64,
    lmax: usize,
    diffusion: Vec<f64>,
    matrix: Mat<c64>,
}

impl ModeOperator {
    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn dim(&self) -> usize {
        2 * self.lmax + 1
    }

    pub fn wavenumber(&self, i: usize) -> i64 {
        i as i64 - self.lmax as i64
    }

    /// Diagonal `ν(k² + l²)^{α/2}`, the Hermitian part of the matrix.
    pub fn diffusion(&self) -> &[f64] {
        &self.diffusion
    }

    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    /// `M - iλ I`.
    pub fn shifted(&self, lambda: f64) -> Mat<c64> {
        let mut a = self.matrix.clone();
        for i in 0..self.dim() {
            a[(i, i)] -= c64::new(0.0, lambda);
        }
        a
    }

    /// `e^{-tM}`.
    pub fn propagator(&self, t: f64) -> Result<Mat<c64>> {
        if !(t >= 0.0) {
            return Err(Error::Parameter(format!("propagation time t = {t} must be nonnegative")));
        }
        if t == 0.0 {
            return Ok(Mat::identity(self.dim(), self.dim()));
        }
        let a = Mat::from_fn(self.dim(), self.dim(), |i, j| self.matrix[(i, j)] * (-t));
        expm(a.as_ref())
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu.is_finite() && nu > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("nu = {nu} must be positive")))
    }
}

/// `M = ν diag((k² + l²)^{α/2}) + ik Toeplitz(û)`, `Toeplitz[l, l'] = û(l - l')`.
pub fn build_mode_operator(
    u: &ShearProfile,
    k: i64,
    nu: f64,
    alpha: f64,
    lmax: usize,
) -> Result<ModeOperator> {
    if k == 0 {
        return Err(Error::Parameter(
            "k = 0 has no advection; the x-average evolves by 1D diffusion".into(),
        ));
    }
    check_nu(nu)?;
    check_alpha(alpha)?;
    if lmax < 4 {
        return Err(Error::Parameter(format!("truncation L = {lmax} must be at least 4")));
    }
    let n = 2 * lmax + 1;
    let l_of = |i: usize| i as i64 - lmax as i64;
    let diffusion: Vec<f64> = (0..n).map(|i| nu * radial_power(k, l_of(i), alpha)).collect();
    let ik = c64::new(0.0, k as f64);
    let mut matrix = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        matrix[(i, i)] = c64::new(diffusion[i], 0.0);
        for &(d, c) in u.band() {
            let j = i as i64 - d;
            if (0..n as i64).contains(&j) {
                matrix[(i, j as usize)] += ik * c;
            }
        }
    }
    Ok(ModeOperator {
        k,
        nu,
        alpha,
        lmax,
        diffusion,
        matrix,
    })
}

fn mat_vec(a: MatRef<'_, c64>, v: &[c64]) -> Vec<c64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * v[j]).sum())
        .collect()
}

/// `e^{-tM} g₀`.
pub fn propagate_mode(op: &ModeOperator, g0: &[c64], t: f64) -> Result<Vec<c64>> {
    if g0.len() != op.dim() {
        return Err(Error::Shape(format!(
            "mode vector of length {} for an operator of dimension {}",
            g0.len(),
            op.dim()
        )));
    }
    let e = op.propagator(t)?;
    Ok(mat_vec(e.as_ref(), g0))
}

/// Largest singular value.
pub fn spectral_norm(a: MatRef<'_, c64>) -> Result<f64> {
    let s = a
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    Ok(s.first().copied().unwrap_or(0.0))
}

/// Smallest singular value.
pub fn smallest_singular_value(a: MatRef<'_, c64>) -> Result<f64> {
    let s = a
        .singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    Ok(s.last().copied().unwrap_or(0.0))
}

/// `‖e^{-tM}‖₂`.
pub fn semigroup_norm(op: &ModeOperator, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    spectral_norm(op.propagator(t)?.as_ref())
}

/// `‖e^{-tL} P≠‖` as the largest per-mode norm over `1 ≤ k ≤ k_max`; the
/// operator for `-k` is the complex conjugate of the one for `k`, so it has
/// the same norm.
pub fn semigroup_norm_nonzero(
    u: &ShearProfile,
    nu: f64,
    alpha: f64,
    t: f64,
    k_max: i64,
    lmax: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 1..=k_max {
        worst = worst.max(semigroup_norm(&build_mode_operator(u, k, nu, alpha, lmax)?, t)?);
    }
    Ok(worst)
}

/// Exponential fit `N(t) ≈ Ĉ e^{-λ̂ t}` by least squares on `(t, ln N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub prefactor: f64,
    pub window: (f64, f64),
    /// Root-mean-square residual of `ln N`.
    pub residual: f64,
}

impl DecayFit {
    pub fn envelope(&self, t: f64) -> f64 {
        self.prefactor * (-self.rate * t).exp()
    }
}

pub(crate) fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

pub fn fit_decay_rate(samples: &[(f64, f64)]) -> Result<DecayFit> {
    if samples.len() < 8 {
        return Err(Error::Data(format!(
            "decay fit needs at least 8 samples, got {}",
            samples.len()
        )));
    }
    if let Some(&(t, v)) = samples.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Data(format!("nonpositive norm sample {v} at t = {t}")));
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let logs: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let (slope, intercept, residual) = least_squares_line(&ts, &logs);
    Ok(DecayFit {
        rate: -slope,
        prefactor: intercept.exp(),
        window: (ts[0], ts[ts.len() - 1]),
        residual,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct DecaySampling {
    pub samples: usize,
    /// Fit stops once the norm drops below this.
    pub floor: f64,
    /// Transient cut `t_a = transient_factor / λ̂₀`.
    pub transient_factor: f64,
}

impl Default for DecaySampling {
    fn default() -> Self {
        Self {
            samples: 32,
            floor: 1e-12,
            transient_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayMeasurement {
    pub fit: DecayFit,
    /// Two-point rate estimate that set the transient cut.
    pub initial_rate: f64,
    pub samples: Vec<(f64, f64)>,
}

/// Samples `‖e^{-tM}‖` past the initial transient and fits the decay rate.
///
/// A rough rate `λ̂₀` comes from doubling `t` until the norm halves; the fit
/// window starts at `transient_factor/λ̂₀` and runs until the norm drops below
/// `floor`, sampled uniformly by repeated multiplication with `e^{-Δt M}`.
pub fn measure_decay(op: &ModeOperator, cfg: &DecaySampling) -> Result<DecayMeasurement> {
    let mut t = 1.0;
    let mut p = op.propagator(t)?;
    let mut norm = spectral_norm(p.as_ref())?;
    let mut prev = (0.0, 1.0);
    while norm > 0.5 {
        if t > 1e12 {
            return Err(Error::Numerical(format!(
                "no decay detected up to t = {t:.1e} for k = {}",
                op.k()
            )));
        }
        prev = (t, norm);
        p = &p * &p;
        t *= 2.0;
        norm = spectral_norm(p.as_ref())?;
    }
    let lambda0 = (prev.1 / norm).ln() / (t - prev.0);

    let t_a = cfg.transient_factor / lambda0;
    let start = op.propagator(t_a)?;
    let n_a = spectral_norm(start.as_ref())?;
    let mut span = (n_a / cfg.floor).ln().max(1.0) / lambda0;
    for _ in 0..6 {
        let dt = span / (cfg.samples - 1) as f64;
        let step = op.propagator(dt)?;
        let mut p = start.clone();
        let mut samples = vec![(t_a, n_a)];
        for j in 1..4 * cfg.samples {
            p = &step * &p;
            let n = spectral_norm(p.as_ref())?;
            if n < cfg.floor {
                break;
            }
            samples.push((t_a + j as f64 * dt, n));
        }
        if samples.len() >= 8 {
            return Ok(DecayMeasurement {
                fit: fit_decay_rate(&samples)?,
                initial_rate: lambda0,
                samples,
            });
        }
        span /= 4.0;
    }
    Err(Error::Numerical(format!(
        "could not place 8 samples above the floor {:.1e} for k = {}",
        cfg.floor,
        op.k()
    )))
}

/// `I(s) = ν ∫_s^T ‖Λ^{α/2} e^{-τM}‖² dτ` on `s = jT/steps`, trapezoidal in τ.
pub fn integrated_dissipation(op: &ModeOperator, t_end: f64, steps: usize) -> Result<Vec<(f64, f64)>> {
    if steps == 0 || !(t_end > 0.0) {
        return Err(Error::Parameter("integration needs t_end > 0 and at least one step".into()));
    }
    let h = t_end / steps as f64;
    let step = op.propagator(h)?;
    let weight: Vec<f64> = (0..op.dim())
        .map(|i| radial_power(op.k(), op.wavenumber(i), 0.5 * op.alpha()))
        .collect();
    let mut p = Mat::<c64>::identity(op.dim(), op.dim());
    let mut f = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        if j > 0 {
            p = &step * &p;
        }
        let weighted = Mat::from_fn(op.dim(), op.dim(), |r, c| p[(r, c)] * weight[r]);
        f.push(spectral_norm(weighted.as_ref())?.powi(2));
    }
    let mut out = vec![(t_end, 0.0); steps + 1];
    let mut acc = 0.0;
    for j in (0..steps).rev() {
        acc += 0.5 * h * (f[j] + f[j + 1]);
        out[j] = (j as f64 * h, op.nu() * acc);
    }
    Ok(out)
}

/// `ik [Λ_y^{α/2}, Toeplitz(û)]` on `l = -L ..= L`: the commutator
/// `Λ_y^{α/2}(u∂x ·) - u∂x Λ_y^{α/2}(·)` restricted to x-mode `k`.
pub fn mode_commutator(u: &ShearProfile, k: i64, alpha: f64, lmax: usize) -> Mat<c64> {
    let n = 2 * lmax + 1;
    let lam = |i: usize| radial_power(0, i as i64 - lmax as i64, 0.5 * alpha);
    let ik = c64::new(0.0, k as f64);
    let mut c = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        for &(d, ud) in u.band() {
            let j = i as i64 - d;
            if (0..n as i64).contains(&j) {
                let j = j as usize;
                c[(i, j)] = ik * ud * (lam(i) - lam(j));
            }
        }
    }
    c
}

/// `R f = Λ_y^{α/2}(u ∂x f) - u ∂x Λ_y^{α/2} f`.
pub fn commutator_r(f: &SpectralField2D, u: &ShearProfile, alpha: f64) -> Result<SpectralField2D> {
    check_alpha(alpha)?;
    let s = 0.5 * alpha;
    Ok(&ops::frac_power_y(&u.advect(f), s) - &u.advect(&ops::frac_power_y(f, s)))
}

/// Coefficients of x-mode `k` for `l = -L ..= L`, zero outside the grid band.
pub fn mode_vector(f: &SpectralField2D, k: i64, lmax: usize) -> Vec<c64> {
    let grid = f.grid();
    let nyq = -((grid.ny() / 2) as i64);
    (-(lmax as i64)..=lmax as i64)
        .map(|l| {
            if grid.contains(k, l) && l != nyq {
                f.get(k, l)
            } else {
                c64::new(0.0, 0.0)
            }
        })
        .collect()
}

fn norm_sq(v: &[c64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Relative residual of
///
/// `S_t g = Λ_y^{α/2} S_t Λ_y^{-α/2} g + ∫₀ᵗ S_{t-τ} R S_τ Λ_y^{-α/2} g dτ`,  `g = ∂y f₀`,
///
/// evaluated per x-mode with `q`-point Gauss–Legendre quadrature in τ.
/// Differentiating `Λ_y^{α/2} S_τ Λ_y^{-α/2} g` in τ and using
/// `Λ_y^{α/2} L_k = L_k Λ_y^{α/2} + R` gives the identity exactly, also for
/// the truncated matrices, so the residual measures quadrature and
/// matrix-exponential error only.
pub fn duhamel_identity_check(
    f0: &SpectralField2D,
    u: &ShearProfile,
    nu: f64,
    alpha: f64,
    t: f64,
    q: usize,
    lmax: usize,
) -> Result<f64> {
    check_nonzero_only(f0)?;
    if !(t >= 0.0) {
        return Err(Error::Parameter(format!("t = {t} must be nonnegative")));
    }
    let q = NonZeroUsize::new(q).ok_or_else(|| Error::Parameter("q must be positive".into()))?;
    let rule = GaussLegendre::new(q);
    let nodes: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * t * (x + 1.0), 0.5 * t * w))
        .collect();

    let half = 0.5 * alpha;
    let kmax = f0.grid().k_max();
    let (mut num, mut den) = (0.0, 0.0);
    for k in -kmax..=kmax {
        if k == 0 {
            continue;
        }
        let f = mode_vector(f0, k, lmax);
        if f.iter().all(|c| c.norm() == 0.0) {
            continue;
        }
        let op = build_mode_operator(u, k, nu, alpha, lmax)?;
        let ls: Vec<i64> = (0..op.dim()).map(|i| op.wavenumber(i)).collect();
        let g: Vec<c64> = f.iter().zip(&ls).map(|(c, &l)| c * c64::new(0.0, l as f64)).collect();
        let w: Vec<c64> = g.iter().zip(&ls).map(|(c, &l)| c * radial_power(0, l, -half)).collect();

        let st = op.propagator(t)?;
        let lhs = mat_vec(st.as_ref(), &g);
        let mut rhs: Vec<c64> = mat_vec(st.as_ref(), &w)
            .into_iter()
            .zip(&ls)
            .map(|(c, &l)| c * radial_power(0, l, half))
            .collect();

        if t > 0.0 {
            let comm = mode_commutator(u, k, alpha, lmax);
            for &(tau, wt) in &nodes {
                let inner = mat_vec(comm.as_ref(), &propagate_mode(&op, &w, tau)?);
                let term = propagate_mode(&op, &inner, t - tau)?;
                for (r, v) in rhs.iter_mut().zip(term) {
                    *r += v * wt;
                }
            }
        }
        let diff: Vec<c64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        num += norm_sq(&diff);
        den += norm_sq(&lhs);
    }
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    #[test]
    fn zero_shear_operator_is_diagonal() {
        let op = build_mode_operator(&ShearProfile::zero(), 2, 0.1, 1.5, 8).unwrap();
        for i in 0..op.dim() {
            for j in 0..op.dim() {
                let expect = if i == j { 0.1 * radial_power(2, op.wavenumber(i), 1.5) } else { 0.0 };
                assert_eq!(op.matrix()[(i, j)], c64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn kolmogorov_off_diagonals() {
        let k = 3;
        let op = build_mode_operator(&ShearProfile::kolmogorov(), k, 0.1, 1.0, 6).unwrap();
        let m = op.matrix();
        for i in 1..op.dim() {
            assert!((m[(i, i - 1)] - c64::new(0.0, 1.5)).norm() < 1e-15);
            assert!((m[(i - 1, i)] - c64::new(0.0, 1.5)).norm() < 1e-15);
        }
        assert_eq!(m[(0, 2)], c64::new(0.0, 0.0));
        // Hermitian part is exactly the diffusion diagonal
        for i in 0..op.dim() {
            for j in 0..op.dim() {
                let h = 0.5 * (m[(i, j)] + m[(j, i)].conj());
                let d = if i == j { op.diffusion()[i] } else { 0.0 };
                assert_eq!(h, c64::new(d, 0.0));
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let u = ShearProfile::kolmogorov();
        assert!(matches!(build_mode_operator(&u, 0, 0.1, 1.5, 8), Err(Error::Parameter(_))));
        assert!(build_mode_operator(&u, 1, 0.0, 1.5, 8).is_err());
        assert!(build_mode_operator(&u, 1, 0.1, 2.5, 8).is_err());
        assert!(build_mode_operator(&u, 1, 0.1, 1.5, 3).is_err());
        let op = build_mode_operator(&u, 1, 0.1, 1.5, 8).unwrap();
        assert!(matches!(propagate_mode(&op, &vec![c64::new(1.0, 0.0); 17], -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn pure_diffusion_propagation() {
        let (nu, alpha, k, t) = (0.01, 1.5, 1, 7.0);
        let op = build_mode_operator(&ShearProfile::zero(), k, nu, alpha, 8).unwrap();
        let mut g0 = vec![c64::new(0.0, 0.0); op.dim()];
        let i = 8 + 3;
        g0[i] = c64::new(1.0, 0.0);
        let g = propagate_mode(&op, &g0, t).unwrap();
        let expect = (-t * nu * radial_power(k, 3, alpha)).exp();
        assert!((g[i].re - expect).abs() < 1e-14);
        assert_eq!(propagate_mode(&op, &g0, 0.0).unwrap(), g0);
        assert!((semigroup_norm(&op, t).unwrap() - (-t * nu).exp()).abs() < 1e-14);
    }

    #[test]
    fn exact_exponential_fit() {
        let samples: Vec<(f64, f64)> = (0..12).map(|i| (i as f64, 3.0 * (-0.3 * i as f64).exp())).collect();
        let fit = fit_decay_rate(&samples).unwrap();
        assert!((fit.rate - 0.3).abs() < 1e-10);
        assert!((fit.prefactor - 3.0).abs() < 1e-9);
        assert!(fit_decay_rate(&samples[..7]).is_err());
        let mut bad = samples.clone();
        bad[3].1 = 0.0;
        assert!(matches!(fit_decay_rate(&bad), Err(Error::Data(_))));
    }

    #[test]
    fn diffusion_rate_is_recovered() {
        let op = build_mode_operator(&ShearProfile::zero(), 1, 0.01, 1.5, 8).unwrap();
        let m = measure_decay(&op, &DecaySampling::default()).unwrap();
        assert!((m.fit.rate - 0.01).abs() < 1e-10, "{}", m.fit.rate);
    }

    #[test]
    fn commutator_vanishes_for_constant_shear_and_x_independent_data() {
        let g = TorusGrid::square(32).unwrap();
        let f = SpectralField2D::from_fn(g, |x, y| (x + y).cos() + (2.0 * y).sin());
        let r = commutator_r(&f, &ShearProfile::named("const").unwrap(), 1.5).unwrap();
        assert!(r.max_abs_coeff() < 1e-14);
        let h = SpectralField2D::from_fn(g, |_, y| (3.0 * y).cos());
        assert_eq!(commutator_r(&h, &ShearProfile::kolmogorov(), 1.5).unwrap().max_abs_coeff(), 0.0);
    }

    #[test]
    fn commutator_matches_per_mode_assembly() {
        let g = TorusGrid::square(32).unwrap();
        let f = SpectralField2D::single_mode(g, 1, 1, c64::new(1.0, 0.0));
        let u = ShearProfile::kolmogorov();
        let r = commutator_r(&f, &u, 1.5).unwrap();
        assert!(r.max_abs_coeff() > 0.1);
        let lmax = 15;
        let c = mode_commutator(&u, 1, 1.5, lmax);
        let per_mode = mat_vec(c.as_ref(), &mode_vector(&f, 1, lmax));
        let field_mode = mode_vector(&r, 1, lmax);
        for (a, b) in per_mode.iter().zip(&field_mode) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn duhamel_trivial_cases() {
        let g = TorusGrid::square(32).unwrap();
        let f0 = SpectralField2D::from_fn(g, |x, y| x.cos() * (-(4.0 * (1.0 - y.cos()))).exp());
        let u = ShearProfile::kolmogorov();
        let r0 = duhamel_identity_check(&f0, &u, 0.05, 1.5, 0.0, 16, 16).unwrap();
        assert!(r0 <= 1e-12, "{r0}");
        let rc = duhamel_identity_check(&f0, &ShearProfile::named("const").unwrap(), 0.05, 1.5, 1.0, 16, 16).unwrap();
        assert!(rc <= 1e-10, "{rc}");
        let bad = SpectralField2D::from_fn(g, |_, y| y.cos());
        assert!(matches!(
            duhamel_identity_check(&bad, &u, 0.05, 1.5, 1.0, 16, 16),
            Err(Error::Precondition(_))
        ));
    }
}
