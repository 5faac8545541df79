//! Run configuration: TOML, i.e. `key = value` lines grouped under
//! `[section]` headers. Unknown keys are rejected with their line number.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use fracshear_core::shear::ShearProfile;
use fracshear_core::solver::{resolve_nu, BlowupMonitor, Cadence, SimConfig, StepperKind, TimeStep};
use fracshear_core::spectral::TorusGrid;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::scenario::ScenarioName;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioName>,
    #[serde(default)]
    pub seed: u64,
    pub physics: Physics,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub time: Time,
    #[serde(default)]
    pub monitor: Monitor,
    #[serde(default)]
    pub initial: Initial,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub linear: Linear,
    #[serde(default)]
    pub blowup: Blowup,
    #[serde(default)]
    pub duhamel: Duhamel,
    #[serde(default)]
    pub audit: Audit,
    #[serde(default)]
    pub kernel: Kernel,
    #[serde(default)]
    pub acceptance: Acceptance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShearName {
    Zero,
    Const,
    Cos,
    Cos2,
    Sin,
    Sin3,
}

impl ShearName {
    pub fn as_str(self) -> &'static str {
        match self {
            ShearName::Zero => "zero",
            ShearName::Const => "const",
            ShearName::Cos => "cos",
            ShearName::Cos2 => "cos2",
            ShearName::Sin => "sin",
            ShearName::Sin3 => "sin3",
        }
    }

    pub fn profile(self) -> Result<ShearProfile> {
        Ok(ShearProfile::named(self.as_str())?)
    }
}

fn default_true() -> bool {
    true
}

fn default_shear() -> ShearName {
    ShearName::Cos
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Flow amplitude of the original-time equation; `ν = 1/A`.
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default = "default_shear")]
    pub shear: ShearName,
    #[serde(default = "default_true")]
    pub nonlinear: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { nx: 128, ny: 128 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Time {
    pub stepper: StepperKind,
    /// Fixed step; adaptive stepping below `dt_max` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub dt_max: f64,
    /// Rescaled final time; scenarios that derive their horizon leave it unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    /// Snapshot spacing in time; overrides `cadence_steps`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cadence: Option<f64>,
    pub cadence_steps: u64,
    pub clip_negative: bool,
}

impl Default for Time {
    fn default() -> Self {
        Self {
            stepper: StepperKind::IfRk2,
            dt: None,
            dt_max: 1e-2,
            t_end: None,
            cadence: None,
            cadence_steps: 10,
            clip_negative: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Monitor {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linf_threshold: Option<f64>,
    pub tail_fraction: f64,
    pub dt_floor: f64,
}

impl Default for Monitor {
    fn default() -> Self {
        let m = BlowupMonitor::default();
        Self {
            linf_threshold: m.linf_threshold,
            tail_fraction: m.tail_fraction_threshold,
            dt_floor: m.dt_floor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    GaussianBump,
    SingleMode,
    RandomBand,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Initial {
    pub kind: InitialKind,
    /// `∫n₀`.
    pub mass: f64,
    pub center: [f64; 2],
    pub width: f64,
    pub k: i64,
    pub l: i64,
    pub amplitude: f64,
    pub band: i64,
    /// Falls back to the top-level seed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl Default for Initial {
    fn default() -> Self {
        Self {
            kind: InitialKind::GaussianBump,
            mass: 40.0,
            center: [0.0, FRAC_PI_2],
            width: 0.6,
            k: 1,
            l: 0,
            amplitude: 0.5,
            band: 4,
            seed: None,
            path: None,
        }
    }
}

/// Parameter grid of the linear scenarios; empty lists fall back to `[physics]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    pub nu: Vec<f64>,
    pub k: Vec<i64>,
    pub alpha: Vec<f64>,
}

impl Default for Sweep {
    fn default() -> Self {
        Self {
            nu: Vec::new(),
            k: vec![1],
            alpha: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Linear {
    /// y-modes `|l| ≤ lmax` per x-mode.
    pub lmax: usize,
    pub decay_samples: usize,
    pub decay_floor: f64,
    pub psi_grid_points: usize,
    pub check_truncation: bool,
    /// Number of log-spaced times in the Gearhart–Prüss comparison.
    pub gp_times: usize,
    /// Time window of that comparison in units of `1/Ψ`.
    pub gp_span: [f64; 2],
}

impl Default for Linear {
    fn default() -> Self {
        Self {
            lmax: 128,
            decay_samples: 32,
            decay_floor: 1e-12,
            psi_grid_points: 201,
            check_truncation: true,
            gp_times: 20,
            gp_span: [0.01, 10.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Blowup {
    pub nu: f64,
    pub t_end: f64,
}

impl Default for Blowup {
    fn default() -> Self {
        Self { nu: 0.2, t_end: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Duhamel {
    pub nu: f64,
    pub t: f64,
    pub lmax: usize,
    pub nodes: Vec<usize>,
    /// Node count whose residual is held to the tolerance.
    pub check_nodes: usize,
}

impl Default for Duhamel {
    fn default() -> Self {
        Self {
            nu: 0.05,
            t: 1.0,
            lmax: 64,
            nodes: vec![8, 16, 32, 64],
            check_nodes: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Audit {
    pub dt: f64,
    pub steps: u64,
    /// Length of the window used for the energy-identity convergence study.
    pub window: f64,
}

impl Default for Audit {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            steps: 10_000,
            window: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Kernel {
    pub fields: usize,
    pub band: i64,
}

impl Default for Kernel {
    fn default() -> Self {
        Self { fields: 1000, band: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Acceptance {
    /// Allowed distance of a fitted exponent from its reference value.
    pub exponent_tolerance: f64,
    pub duhamel_tolerance: f64,
    pub energy_tolerance: f64,
    pub min_order: f64,
    /// Required fraction of the linear rate in the suppression envelope.
    pub rate_fraction: f64,
}

impl Default for Acceptance {
    fn default() -> Self {
        Self {
            exponent_tolerance: 0.08,
            duhamel_tolerance: 1e-6,
            energy_tolerance: 1e-4,
            min_order: 1.9,
            rate_fraction: 0.5,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    /// Validate, and fill `physics.nu` from `A` when only the amplitude was given.
    pub fn resolve(&mut self) -> Result<()> {
        let p = &mut self.physics;
        if !(p.alpha > 0.0 && p.alpha <= 2.0) {
            return Err(HarnessError::Config(format!(
                "physics.alpha = {} must lie in (0, 2]",
                p.alpha
            )));
        }
        let nu = resolve_nu(p.nu, p.amplitude).map_err(|e| HarnessError::Config(e.to_string()))?;
        p.nu = Some(nu);
        TorusGrid::new(self.grid.nx, self.grid.ny).map_err(|e| HarnessError::Config(e.to_string()))?;
        for &a in &self.sweep.alpha {
            if !(a > 0.0 && a <= 2.0) {
                return Err(HarnessError::Config(format!("sweep.alpha = {a} must lie in (0, 2]")));
            }
        }
        if self.sweep.nu.iter().any(|&v| !(v > 0.0)) {
            return Err(HarnessError::Config("sweep.nu values must be positive".into()));
        }
        if self.sweep.k.iter().any(|&k| k == 0) {
            return Err(HarnessError::Config("sweep.k values must be nonzero".into()));
        }
        let [lo, hi] = self.linear.gp_span;
        if !(lo > 0.0 && hi > lo) {
            return Err(HarnessError::Config(format!("linear.gp_span = [{lo}, {hi}] must satisfy 0 < lo < hi")));
        }
        if !(self.duhamel.nu > 0.0) {
            return Err(HarnessError::Config(format!("duhamel.nu = {} must be positive", self.duhamel.nu)));
        }
        if self.initial.kind == InitialKind::File && self.initial.path.is_none() {
            return Err(HarnessError::Config("initial.kind = \"file\" needs initial.path".into()));
        }
        self.sim_config().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn nu(&self) -> f64 {
        self.physics.nu.expect("resolved configuration")
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        Ok(TorusGrid::new(self.grid.nx, self.grid.ny)?)
    }

    pub fn seed_for_initial(&self) -> u64 {
        self.initial.seed.unwrap_or(self.seed)
    }

    pub fn sweep_nus(&self) -> Vec<f64> {
        if self.sweep.nu.is_empty() {
            vec![self.nu()]
        } else {
            self.sweep.nu.clone()
        }
    }

    pub fn sweep_alphas(&self) -> Vec<f64> {
        if self.sweep.alpha.is_empty() {
            vec![self.physics.alpha]
        } else {
            self.sweep.alpha.clone()
        }
    }

    pub fn monitor(&self) -> BlowupMonitor {
        BlowupMonitor {
            linf_threshold: self.monitor.linf_threshold,
            tail_fraction_threshold: self.monitor.tail_fraction,
            dt_floor: self.monitor.dt_floor,
        }
    }

    /// Solver configuration for `[physics]`, `[grid]`, `[time]` and `[monitor]`;
    /// an unset `t_end` becomes 1.
    pub fn sim_config(&self) -> fracshear_core::Result<SimConfig> {
        let grid = TorusGrid::new(self.grid.nx, self.grid.ny)?;
        let u = ShearProfile::named(self.physics.shear.as_str())?;
        let nu = resolve_nu(self.physics.nu, self.physics.amplitude)?;
        let t = &self.time;
        let mut cfg = SimConfig::new(self.physics.alpha, nu, grid, u)?
            .with_nonlinear(self.physics.nonlinear)
            .with_stepper(t.stepper)
            .with_time_step(match t.dt {
                Some(dt) => TimeStep::Fixed(dt),
                None => TimeStep::Adaptive { max: t.dt_max },
            })
            .with_t_end(t.t_end.unwrap_or(1.0))
            .with_cadence(match t.cadence {
                Some(c) => Cadence::Time(c),
                None => Cadence::Steps(t.cadence_steps),
            })
            .with_monitor(self.monitor());
        cfg.clip_negative = t.clip_negative;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::Config(format!("cannot serialize configuration: {e}")))
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    RunConfig::from_toml(&text).map_err(|e| match e {
        HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn version_string() -> String {
    format!("fracshear {}", env!("CARGO_PKG_VERSION"))
}

/// Write the resolved configuration and the code version into `dir`.
pub fn echo_config(cfg: &RunConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let path = dir.join("config.echo.toml");
    std::fs::write(&path, cfg.to_toml()?).map_err(|e| HarnessError::io(&path, e))?;
    let path = dir.join("VERSION");
    std::fs::write(&path, version_string() + "\n").map_err(|e| HarnessError::io(&path, e))?;
    Ok(())
}
