use serde::{Deserialize, Serialize};

use super::monitor::BlowupMonitor;
use crate::error::{check_alpha, Error, Result};
use crate::shear::ShearProfile;
use crate::spectral::TorusGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepperKind {
    /// Integrating factor for `νΛ^α`, Heun for everything else.
    IfRk2,
    /// Exact per-`k` linear flow in two half steps around an explicit
    /// step of the aggregation term.
    ExactLinearStrang,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeStep {
    Fixed(f64),
    /// Chosen each step from the stability limits, never above `max`, and
    /// quantized to `max · 2^{-j}` so linear propagators can be reused.
    Adaptive { max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cadence {
    Steps(u64),
    Time(f64),
}

/// One run of `∂t n + u(y)∂x n + νΛ^α n + ν∇·(n B(n)) = 0`.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub alpha: f64,
    pub nu: f64,
    pub grid: TorusGrid,
    pub u: ShearProfile,
    /// Include the aggregation term `ν∇·(n B(n))`.
    pub nonlinear: bool,
    pub stepper: StepperKind,
    pub time_step: TimeStep,
    pub t_end: f64,
    pub monitor: BlowupMonitor,
    pub cadence: Cadence,
    /// Set negative collocation values to zero after every step. Breaks the
    /// mass and energy identities; off unless asked for.
    pub clip_negative: bool,
    /// Adaptive runs reject a step whose explicit increment exceeds this
    /// fraction of `‖n‖`.
    pub max_rel_change: f64,
}

impl SimConfig {
    pub fn new(alpha: f64, nu: f64, grid: TorusGrid, u: ShearProfile) -> Result<Self> {
        let cfg = Self {
            alpha,
            nu,
            grid,
            u,
            nonlinear: true,
            stepper: StepperKind::IfRk2,
            time_step: TimeStep::Adaptive { max: 1e-2 },
            t_end: 1.0,
            monitor: BlowupMonitor::default(),
            cadence: Cadence::Steps(10),
            clip_negative: false,
            max_rel_change: 0.1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.nu.is_finite() && self.nu > 0.0) {
            return Err(Error::Parameter(format!("nu = {} must be positive", self.nu)));
        }
        let dt = match self.time_step {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Adaptive { max } => max,
        };
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Parameter(format!("dt = {dt} must be positive")));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Parameter(format!("t_end = {} must be nonnegative", self.t_end)));
        }
        if self.u.bandwidth() >= (self.grid.ny() / 2) as i64 {
            return Err(Error::Parameter(format!(
                "shear bandwidth {} is not resolved by ny = {}",
                self.u.bandwidth(),
                self.grid.ny()
            )));
        }
        match self.cadence {
            Cadence::Steps(0) => return Err(Error::Parameter("output cadence of 0 steps".into())),
            Cadence::Time(c) if !(c > 0.0) => {
                return Err(Error::Parameter(format!("output cadence {c} must be positive")))
            }
            _ => {}
        }
        if !(self.max_rel_change > 0.0) {
            return Err(Error::Parameter("max_rel_change must be positive".into()));
        }
        self.monitor.validate()
    }

    pub fn with_stepper(mut self, stepper: StepperKind) -> Self {
        self.stepper = stepper;
        self
    }

    pub fn with_time_step(mut self, time_step: TimeStep) -> Self {
        self.time_step = time_step;
        self
    }

    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_nonlinear(mut self, on: bool) -> Self {
        self.nonlinear = on;
        self
    }

    pub fn with_cadence(mut self, cadence: Cadence) -> Self {
        self.cadence = cadence;
        self
    }

    pub fn with_monitor(mut self, monitor: BlowupMonitor) -> Self {
        self.monitor = monitor;
        self
    }

    pub fn advects(&self) -> bool {
        !self.u.is_zero()
    }
}

/// Diffusion coefficient from either `ν` or the flow amplitude `A` (`ν = 1/A`).
pub fn resolve_nu(nu: Option<f64>, amplitude: Option<f64>) -> Result<f64> {
    match (nu, amplitude) {
        (Some(nu), None) if nu > 0.0 => Ok(nu),
        (None, Some(a)) if a > 0.0 => Ok(1.0 / a),
        (Some(nu), Some(a)) if nu > 0.0 && a > 0.0 => {
            if ((nu * a) - 1.0).abs() <= 1e-12 {
                Ok(nu)
            } else {
                Err(Error::Parameter(format!("nu = {nu} and A = {a} disagree; nu must equal 1/A")))
            }
        }
        (Some(nu), Some(a)) if nu > 0.0 && a == 0.0 => Ok(nu),
        _ => Err(Error::Parameter("need nu > 0 or A > 0 (nu = 1/A)".into())),
    }
}
