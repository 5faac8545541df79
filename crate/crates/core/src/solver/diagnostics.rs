use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::state::SimState;
use crate::error::{check_alpha, Error, Result};
use crate::kernels::aggregation_flux_divergence;
use crate::linear::{fit_decay_rate, DecayFit};
use crate::spectral::{ops, SpectralField2D};

/// One snapshot. `mass` is `∫n` (equal to the L¹ mass while `n ≥ 0`);
/// `l1` is the collocation `∫|n|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub step: u64,
    pub dt: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub l2_nonzero: f64,
    /// `‖Λ^{α/2} n‖`
    pub dissipation: f64,
    /// `‖Λ^{α/2} n≠‖`
    pub dissipation_nonzero: f64,
    pub l2_zero: f64,
    /// `‖Λ_y^{α-1} n⁰‖`
    pub hdot_zero: f64,
    pub h1: f64,
    pub energy_residual: Option<f64>,
    pub min: f64,
    pub tail_fraction: f64,
}

impl DiagnosticsRow {
    pub fn measure(state: &SimState, alpha: f64) -> Self {
        let n = &state.n;
        let samples = n.to_physical();
        let area = n.grid().cell_area();
        let nneq = ops::project_nonzero(n);
        let n0 = n - &nneq;
        Self {
            t: state.t,
            step: state.step,
            dt: state.last_dt,
            mass: 4.0 * PI * PI * n.mean(),
            l1: samples.iter().map(|v| v.abs()).sum::<f64>() * area,
            l2: n.l2_norm(),
            linf: samples.iter().map(|v| v.abs()).fold(0.0, f64::max),
            l2_nonzero: nneq.l2_norm(),
            dissipation: n.hs_seminorm(alpha / 2.0),
            dissipation_nonzero: nneq.hs_seminorm(alpha / 2.0),
            l2_zero: n0.l2_norm(),
            hdot_zero: ops::frac_power_y(&n0, alpha - 1.0).l2_norm(),
            h1: n.h1_norm(),
            energy_residual: None,
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            tail_fraction: super::monitor::tail_fraction(n),
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.mass,
            self.l1,
            self.l2,
            self.linf,
            self.l2_nonzero,
            self.dissipation,
            self.dissipation_nonzero,
            self.l2_zero,
            self.hdot_zero,
            self.h1,
            self.min,
            self.tail_fraction,
        ]
        .iter()
        .all(|v| v.is_finite())
            && self.energy_residual.is_none_or(f64::is_finite)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub rows: Vec<DiagnosticsRow>,
}

impl DiagnosticsRecord {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    /// Largest `|M(t) - M(0)| / M(0)`.
    pub fn mass_drift(&self) -> f64 {
        let Some(first) = self.rows.first() else {
            return 0.0;
        };
        let m0 = first.mass;
        self.rows
            .iter()
            .map(|r| (r.mass - m0).abs() / m0.abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|‖n‖² - ‖n⁰‖² - ‖n≠‖²| / ‖n‖²`.
    pub fn split_defect(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.l2 > 0.0)
            .map(|r| (r.l2.powi(2) - r.l2_zero.powi(2) - r.l2_nonzero.powi(2)).abs() / r.l2.powi(2))
            .fold(0.0, f64::max)
    }
}

/// Residual of `½ d/dt ‖n‖² + ν‖Λ^{α/2}n‖² + ν∫∇·(n B(n)) n = 0` at every
/// interior snapshot of a uniformly spaced window, each normalized by its
/// largest term; returns the worst. The advection term is absent because
/// the discrete `u∂x` is skew-adjoint.
pub fn energy_identity_residual(window: &[SimState], cfg: &SimConfig) -> Result<f64> {
    if window.len() < 3 {
        return Err(Error::Data(format!(
            "energy identity needs at least 3 snapshots, got {}",
            window.len()
        )));
    }
    let h = window[1].t - window[0].t;
    if !(h > 0.0) {
        return Err(Error::Data("snapshot times must increase".into()));
    }
    for w in window.windows(2) {
        if ((w[1].t - w[0].t) - h).abs() > 1e-9 * h {
            return Err(Error::Data(format!(
                "snapshots are not uniformly spaced: {} vs {h}",
                w[1].t - w[0].t
            )));
        }
    }
    let energy: Vec<f64> = window.iter().map(|s| 0.5 * s.n.l2_norm().powi(2)).collect();
    let mut worst = 0.0f64;
    for i in 1..window.len() - 1 {
        let n = &window[i].n;
        let rate = (energy[i + 1] - energy[i - 1]) / (2.0 * h);
        let diss = cfg.nu * n.hs_seminorm(cfg.alpha / 2.0).powi(2);
        let agg = if cfg.nonlinear {
            cfg.nu * n.inner(&aggregation_flux_divergence(n)).re
        } else {
            0.0
        };
        let scale = rate.abs().max(diss.abs()).max(agg.abs());
        if scale > 0.0 {
            worst = worst.max((rate + diss + agg).abs() / scale);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    /// `max (n - n̄)` over the collocation grid.
    pub max_value: f64,
    /// `Λ^α(n - n̄)` at that node.
    pub lambda_at_max: f64,
    /// `Λ^α f(x̄) ‖f‖₂^α / f(x̄)^{1+α}`, `f = n - n̄`.
    pub ratio: f64,
    pub location: (f64, f64),
}

pub fn max_principle_check(n: &SpectralField2D, alpha: f64) -> Result<MaxPrincipleReport> {
    check_alpha(alpha)?;
    let mut f = n.clone();
    f.set(0, 0, num_complex::Complex64::new(0.0, 0.0));
    let samples = f.to_physical();
    let (imax, &fmax) = samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is nonempty");
    if !(fmax > 0.0) {
        return Ok(MaxPrincipleReport {
            max_value: 0.0,
            lambda_at_max: 0.0,
            ratio: 0.0,
            location: (0.0, 0.0),
        });
    }
    let lam = ops::frac_power(&f, alpha).to_physical()[imax];
    let g = n.grid();
    let location = (g.x_node(imax / g.ny()), g.y_node(imax % g.ny()));
    Ok(MaxPrincipleReport {
        max_value: fmax,
        lambda_at_max: lam,
        ratio: lam * f.l2_norm().powf(alpha) / fmax.powf(1.0 + alpha),
        location,
    })
}

/// Upper envelope `Ĉ e^{-λ̂(t - s₀)}` for `‖n≠(t)‖²` over `t ≥ s₀`: the rate
/// is a least-squares fit of the logarithm, the prefactor is then raised until
/// no sample lies above the envelope.
pub fn fit_nonzero_envelope(record: &DiagnosticsRecord, s0: f64) -> Result<DecayFit> {
    let samples: Vec<(f64, f64)> = record
        .rows
        .iter()
        .filter(|r| r.t >= s0 && r.l2_nonzero > 0.0)
        .map(|r| (r.t - s0, r.l2_nonzero.powi(2)))
        .collect();
    let mut fit = fit_decay_rate(&samples)?;
    let lift = samples
        .iter()
        .map(|&(t, v)| v / fit.envelope(t))
        .fold(1.0, f64::max);
    fit.prefactor *= lift;
    fit.window = (fit.window.0 + s0, fit.window.1 + s0);
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shear::ShearProfile;
    use crate::solver::step::step_ifrk2;
    use crate::spectral::TorusGrid;
    use num_complex::Complex64;

    #[test]
    fn cos_x_maximum() {
        let g = TorusGrid::square(32).unwrap();
        let n = SpectralField2D::from_fn(g, |x, _| x.cos());
        let r = max_principle_check(&n, 1.3).unwrap();
        assert!((r.max_value - 1.0).abs() < 1e-14);
        assert!((r.lambda_at_max - 1.0).abs() < 1e-13);
        assert!(r.location.0.abs() < 1e-14);
    }

    #[test]
    fn constant_field_reports_zeros() {
        let g = TorusGrid::square(16).unwrap();
        let r = max_principle_check(&SpectralField2D::constant(g, 4.0), 1.5).unwrap();
        assert_eq!((r.max_value, r.lambda_at_max, r.ratio), (0.0, 0.0, 0.0));
    }

    fn linear_cfg() -> SimConfig {
        SimConfig::new(1.5, 0.1, TorusGrid::square(16).unwrap(), ShearProfile::zero())
            .unwrap()
            .with_nonlinear(false)
    }

    #[test]
    fn energy_residual_of_constant_state() {
        let c = linear_cfg();
        let n = SpectralField2D::constant(c.grid, 2.0);
        let w: Vec<SimState> = (0..3).map(|i| SimState::at(i as f64 * 0.1, n.clone())).collect();
        assert!(energy_identity_residual(&w, &c).unwrap() <= 1e-12);
    }

    #[test]
    fn energy_residual_is_second_order_for_an_exponential() {
        let c = linear_cfg();
        let mut n = SpectralField2D::constant(c.grid, 1.0);
        n.set(2, 1, Complex64::new(0.3, 0.0));
        n.set(-2, -1, Complex64::new(0.3, 0.0));
        let res = |dt: f64| {
            let mut w = vec![SimState::new(n.clone())];
            for _ in 0..2 {
                let next = step_ifrk2(w.last().unwrap(), &c, dt).unwrap();
                w.push(next);
            }
            energy_identity_residual(&w, &c).unwrap()
        };
        let (r1, r2) = (res(0.02), res(0.01));
        assert!(r1 > 0.0);
        assert!((r1 / r2 - 4.0).abs() < 0.05, "{}", r1 / r2);
    }

    #[test]
    fn nonuniform_window_rejected() {
        let c = linear_cfg();
        let n = SpectralField2D::constant(c.grid, 1.0);
        let w = vec![
            SimState::at(0.0, n.clone()),
            SimState::at(0.1, n.clone()),
            SimState::at(0.3, n),
        ];
        assert!(matches!(energy_identity_residual(&w, &c), Err(Error::Data(_))));
        assert!(energy_identity_residual(&w[..2], &c).is_err());
    }
}
