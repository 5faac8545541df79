use faer::{c64, Mat};
use rayon::prelude::*;

use super::config::{SimConfig, StepperKind, TimeStep};
use super::state::SimState;
use crate::error::{Error, Result};
use crate::kernels::aggregation_flux_divergence;
use crate::linear::build_mode_operator;
use crate::shear::ShearProfile;
use crate::spectral::{Multiplier, SpectralField2D, TorusGrid};

/// `e^{-τ L}` for the whole linear part `L = u∂x + νΛ^α` on a grid.
///
/// Without advection this is the diffusion multiplier. Otherwise each
/// `k = 1..=nx/2-1` carries a dense exponential of its mode operator on
/// `|l| ≤ ny/2-1`, negative `k` follow from the field being real, and the
/// unpaired Nyquist row and column (never touched by advection) are diffused.
#[derive(Debug, Clone)]
pub struct LinearFlow {
    tau: f64,
    diag: Multiplier,
    props: Vec<Mat<c64>>,
    lmax: usize,
}

impl LinearFlow {
    pub fn new(cfg: &SimConfig, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::Parameter(format!("linear flow time {tau} must be nonnegative")));
        }
        let grid = cfg.grid;
        let diag = Multiplier::heat(grid, cfg.nu * tau, cfg.alpha);
        let lmax = grid.ny() / 2 - 1;
        let props = if cfg.advects() && tau > 0.0 {
            (1..=grid.k_max())
                .into_par_iter()
                .map(|k| build_mode_operator(&cfg.u, k, cfg.nu, cfg.alpha, lmax)?.propagator(tau))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            tau,
            diag,
            props,
            lmax,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn is_diagonal(&self) -> bool {
        self.props.is_empty()
    }

    /// Apply to a real field.
    pub fn apply(&self, n: &SpectralField2D) -> SpectralField2D {
        let mut out = n.clone();
        self.diag.apply_in_place(&mut out);
        if self.props.is_empty() {
            return out;
        }
        let lmax = self.lmax as i64;
        let dim = 2 * self.lmax + 1;
        for (i, p) in self.props.iter().enumerate() {
            let k = i as i64 + 1;
            let g = Mat::from_fn(dim, 1, |j, _| n.get(k, j as i64 - lmax));
            let h = p * &g;
            for j in 0..dim {
                let l = j as i64 - lmax;
                out.set(k, l, h[(j, 0)]);
                out.set(-k, -l, h[(j, 0)].conj());
            }
        }
        out
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("time step {dt} must be positive")))
    }
}

fn check_finite(f: &SpectralField2D) -> Result<()> {
    if f.coeffs().iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical("non-finite coefficients after step".into()))
    }
}

/// `-ν∇·(n B(n))`, or zero when the nonlinearity is off.
fn aggregation_rhs(n: &SpectralField2D, cfg: &SimConfig) -> SpectralField2D {
    if cfg.nonlinear {
        aggregation_flux_divergence(n).scaled(-cfg.nu)
    } else {
        SpectralField2D::zeros(*n.grid())
    }
}

/// `-u∂x n - ν∇·(n B(n))`: everything except the diffusion.
fn explicit_rhs(n: &SpectralField2D, cfg: &SimConfig) -> SpectralField2D {
    let mut rhs = aggregation_rhs(n, cfg);
    if cfg.advects() {
        rhs.axpy(-1.0, &cfg.u.advect(n));
    }
    rhs
}

/// Returns the new state and the explicit increment relative to `‖n‖`.
pub(crate) fn ifrk2(state: &SimState, cfg: &SimConfig, dt: f64) -> Result<(SimState, f64)> {
    check_dt(dt)?;
    let e = Multiplier::heat(cfg.grid, cfg.nu * dt, cfg.alpha);
    let n = &state.n;
    let f0 = explicit_rhs(n, cfg);

    let mut stage = n.clone();
    stage.axpy(dt, &f0);
    e.apply_in_place(&mut stage);
    let f1 = explicit_rhs(&stage, cfg);

    let mut out = n.clone();
    e.apply_in_place(&mut out);
    let linear_only = out.clone();
    let mut ef0 = f0;
    e.apply_in_place(&mut ef0);
    out.axpy(0.5 * dt, &ef0);
    out.axpy(0.5 * dt, &f1);
    out.symmetrize();
    check_finite(&out)?;

    let change = relative_change(&out, &linear_only, n);
    Ok((advance(state, out, dt), change))
}

/// Integrating-factor Heun step: `νΛ^α` exact, the rest explicit on
/// `v = e^{tνΛ^α} n`.
pub fn step_ifrk2(state: &SimState, cfg: &SimConfig, dt: f64) -> Result<SimState> {
    ifrk2(state, cfg, dt).map(|(s, _)| s)
}

pub(crate) fn strang(state: &SimState, cfg: &SimConfig, half: &LinearFlow) -> Result<(SimState, f64)> {
    let dt = 2.0 * half.tau();
    check_dt(dt)?;
    let n1 = half.apply(&state.n);
    let mut n2 = n1.clone();
    if cfg.nonlinear {
        let a0 = aggregation_rhs(&n1, cfg);
        let mut stage = n1.clone();
        stage.axpy(dt, &a0);
        let a1 = aggregation_rhs(&stage, cfg);
        n2.axpy(0.5 * dt, &a0);
        n2.axpy(0.5 * dt, &a1);
    }
    let change = relative_change(&n2, &n1, &n1);
    let mut out = half.apply(&n2);
    out.symmetrize();
    check_finite(&out)?;
    Ok((advance(state, out, dt), change))
}

/// Strang splitting: `half` of the exact linear flow, a Heun step of the
/// aggregation term over the full step, `half` again. The step is `2·half.tau()`.
pub fn step_exact_linear_strang(state: &SimState, cfg: &SimConfig, half: &LinearFlow) -> Result<SimState> {
    strang(state, cfg, half).map(|(s, _)| s)
}

fn relative_change(new: &SpectralField2D, reference: &SpectralField2D, scale: &SpectralField2D) -> f64 {
    let s = scale.l2_norm();
    if s == 0.0 {
        0.0
    } else {
        (new - reference).l2_norm() / s
    }
}

fn advance(state: &SimState, n: SpectralField2D, dt: f64) -> SimState {
    SimState {
        t: state.t + dt,
        n,
        step: state.step + 1,
        last_dt: dt,
    }
}

/// `0.5 / (max|u| · k_max)`, infinite without advection.
pub fn cfl_limit(u: &ShearProfile, grid: &TorusGrid) -> f64 {
    let umax = u.max_abs();
    if umax == 0.0 {
        f64::INFINITY
    } else {
        0.5 / (umax * grid.k_max() as f64)
    }
}

/// `0.2 / (ν ‖n‖∞ k_max)` for the explicit aggregation term.
pub fn aggregation_limit(linf: f64, nu: f64, grid: &TorusGrid) -> f64 {
    let rate = nu * linf * grid.k_max() as f64;
    if rate == 0.0 {
        f64::INFINITY
    } else {
        0.2 / rate
    }
}

/// Step size before quantization. Fixed steps are returned as is. The
/// advective limit applies only to the integrating-factor scheme; the Strang
/// scheme integrates advection exactly.
pub fn adapt_dt(state: &SimState, cfg: &SimConfig) -> f64 {
    let max = match cfg.time_step {
        TimeStep::Fixed(dt) => return dt,
        TimeStep::Adaptive { max } => max,
    };
    let mut dt = max;
    if cfg.stepper == StepperKind::IfRk2 {
        dt = dt.min(cfl_limit(&cfg.u, &cfg.grid));
    }
    if cfg.nonlinear {
        dt = dt.min(aggregation_limit(state.n.norms().linf, cfg.nu, &cfg.grid));
    }
    dt
}

/// Largest `max · 2^{-j}` not exceeding `target`.
pub fn quantize_dt(target: f64, max: f64) -> f64 {
    if !(target > 0.0) {
        return 0.0;
    }
    if target >= max {
        return max;
    }
    let j = (max / target).log2().ceil();
    let dt = max * 0.5f64.powf(j);
    if dt > target {
        dt * 0.5
    } else {
        dt
    }
}
