//! Named scenarios. Each one reads a [`RunConfig`], writes its artifacts into
//! an output directory and returns a summary of pass/fail checks.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use fracshear_core::kernels::{kernel_b1, kernel_b2, kernel_bound_ratios};
use fracshear_core::linear::{build_mode_operator, duhamel_identity_check, measure_decay, DecaySampling};
use fracshear_core::pseudospectrum::{gearhart_pruss_with, power_law_fit, psi_bound_with, PsiOptions, PsiResult};
use fracshear_core::shear::{detect_flatness_order, ShearProfile};
use fracshear_core::solver::{
    energy_identity_residual, fit_nonzero_envelope, initial, max_principle_check, run_simulation_with, Cadence,
    RunOutput, SimState, TimeStep,
};
use fracshear_core::spectral::{div, io, project_nonzero, project_zero, SpectralField2D};
use fracshear_core::Error as CoreError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{echo_config, InitialKind, RunConfig, ShearName};
use crate::emit::{emit_plot_data, write_diagnostics, write_json, write_rows, PlotRecord};
use crate::error::{HarnessError, Result};
use crate::sweep::{linear_grid, run_points, LinearPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    LinearDecaySweep,
    PsiSweep,
    GearhartPruss,
    SuppressionDemo,
    BlowupDemo,
    DuhamelCheck,
    EnergyAudit,
    KernelProps,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 8] = [
        ScenarioName::LinearDecaySweep,
        ScenarioName::PsiSweep,
        ScenarioName::GearhartPruss,
        ScenarioName::SuppressionDemo,
        ScenarioName::BlowupDemo,
        ScenarioName::DuhamelCheck,
        ScenarioName::EnergyAudit,
        ScenarioName::KernelProps,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::LinearDecaySweep => "linear-decay-sweep",
            ScenarioName::PsiSweep => "psi-sweep",
            ScenarioName::GearhartPruss => "gearhart-pruss",
            ScenarioName::SuppressionDemo => "suppression-demo",
            ScenarioName::BlowupDemo => "blowup-demo",
            ScenarioName::DuhamelCheck => "duhamel-check",
            ScenarioName::EnergyAudit => "energy-audit",
            ScenarioName::KernelProps => "kernel-props",
        }
    }
}

impl std::str::FromStr for ScenarioName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|n| n.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|n| n.as_str()).collect();
            format!("unknown scenario '{s}' (expected one of {})", names.join(", "))
        })
    }
}

impl std::fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `|value - target| ≤ tolerance`
    Within,
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub value: f64,
    pub target: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Within,
            value,
            target,
            tolerance: Some(tolerance),
            passed: (value - target).abs() <= tolerance,
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::AtMost,
            value,
            target: bound,
            tolerance: None,
            passed: value <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::AtLeast,
            value,
            target: bound,
            tolerance: None,
            passed: value >= bound,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub point: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioSummary {
    pub scenario: ScenarioName,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub point_failures: Vec<PointFailure>,
    pub measurements: serde_json::Value,
}

impl ScenarioSummary {
    fn new(scenario: ScenarioName, checks: Vec<Check>, point_failures: Vec<PointFailure>, measurements: serde_json::Value) -> Self {
        Self {
            scenario,
            passed: checks.iter().all(|c| c.passed),
            checks,
            point_failures,
            measurements,
        }
    }
}

/// Runs `name`, writes the echoed configuration, the artifacts and
/// `summary.json` into `out`.
pub fn run_scenario(name: ScenarioName, cfg: &RunConfig, out: &Path, workers: usize) -> Result<ScenarioSummary> {
    echo_config(cfg, out)?;
    let summary = match name {
        ScenarioName::LinearDecaySweep => linear_decay_sweep(cfg, out, workers)?,
        ScenarioName::PsiSweep => psi_sweep(cfg, out, workers)?,
        ScenarioName::GearhartPruss => gearhart_pruss(cfg, out, workers)?,
        ScenarioName::SuppressionDemo => suppression_demo(cfg, out)?,
        ScenarioName::BlowupDemo => blowup_demo(cfg, out)?,
        ScenarioName::DuhamelCheck => duhamel_check(cfg, out, workers)?,
        ScenarioName::EnergyAudit => energy_audit(cfg, out)?,
        ScenarioName::KernelProps => kernel_props(cfg, out, workers)?,
    };
    write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Initial data described by `[initial]`.
pub fn initial_field(cfg: &RunConfig) -> Result<SpectralField2D> {
    let grid = cfg.grid()?;
    let i = &cfg.initial;
    let f = match i.kind {
        InitialKind::GaussianBump => initial::gaussian_bump(grid, i.mass, (i.center[0], i.center[1]), i.width)?,
        InitialKind::SingleMode => initial::single_mode(grid, i.k, i.l, i.amplitude, i.mass)?,
        InitialKind::RandomBand => initial::random_band(grid, i.band, i.amplitude, i.mass, cfg.seed_for_initial())?,
        InitialKind::File => {
            let path = i.path.as_ref().ok_or_else(|| HarnessError::Config("initial.path is missing".into()))?;
            let f = io::load_field(path)?;
            if *f.grid() != grid {
                return Err(HarnessError::Config(format!(
                    "{} holds a {}x{} field, configured grid is {}x{}",
                    path.display(),
                    f.grid().nx(),
                    f.grid().ny(),
                    grid.nx(),
                    grid.ny()
                )));
            }
            f
        }
    };
    Ok(f)
}

/// Reference exponents `(ν, k)` of the rate law: `m/(m+α)` and `α/(m+α)`
/// with `m` the detected flatness order, or `(1, α)` for a constant flow.
pub fn reference_exponents(u: &ShearProfile, alpha: f64) -> Result<(f64, f64)> {
    match detect_flatness_order(u) {
        Ok(f) => {
            let m = f.m as f64;
            Ok((m / (m + alpha), alpha / (m + alpha)))
        }
        Err(CoreError::DegenerateProfile(_)) => Ok((1.0, alpha)),
        Err(e) => Err(e.into()),
    }
}

fn point_label(p: &LinearPoint) -> String {
    format!("alpha={} nu={:e} k={}", p.alpha, p.nu, p.k)
}

fn excluded_json(excluded: &[LinearPoint]) -> serde_json::Value {
    json!(excluded.iter().map(point_label).collect::<Vec<_>>())
}

/// Fits `value ≈ C ν^a |k|^b` within one α and checks whichever exponents vary.
fn exponent_checks(
    what: &str,
    alpha: f64,
    points: &[(f64, f64, f64)],
    reference: (f64, f64),
    tol: f64,
    checks: &mut Vec<Check>,
) -> serde_json::Value {
    let varies = |f: fn(&(f64, f64, f64)) -> f64| points.iter().any(|p| f(p) != f(&points[0]));
    match power_law_fit(points) {
        Ok(fit) => {
            if let Some(a) = fit.exponent_nu {
                checks.push(Check::within(format!("{what} nu exponent, alpha={alpha}"), a, reference.0, tol));
            }
            if let Some(b) = fit.exponent_k {
                checks.push(Check::within(format!("{what} k exponent, alpha={alpha}"), b, reference.1, tol));
            }
            json!({ "alpha": alpha, "fit": fit, "reference_nu": reference.0, "reference_k": reference.1 })
        }
        Err(e) => {
            if !points.is_empty() && varies(|p| p.0) {
                checks.push(Check::within(format!("{what} nu exponent, alpha={alpha}"), f64::NAN, reference.0, tol));
            }
            if !points.is_empty() && varies(|p| p.1) {
                checks.push(Check::within(format!("{what} k exponent, alpha={alpha}"), f64::NAN, reference.1, tol));
            }
            json!({ "alpha": alpha, "fit_error": e.to_string() })
        }
    }
}

fn linear_decay_sweep(cfg: &RunConfig, out: &Path, workers: usize) -> Result<ScenarioSummary> {
    let u = cfg.physics.shear.profile()?;
    let (points, excluded) = linear_grid(&cfg.sweep_alphas(), &cfg.sweep_nus(), &cfg.sweep.k);
    let lin = &cfg.linear;
    let sampling = DecaySampling {
        samples: lin.decay_samples,
        floor: lin.decay_floor,
        ..DecaySampling::default()
    };
    let results = run_points(&points, workers, |p| {
        measure_decay(&build_mode_operator(&u, p.k, p.nu, p.alpha, lin.lmax)?, &sampling)
    })?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (i, (p, r)) in points.iter().zip(&results).enumerate() {
        match r {
            Ok(m) => {
                rows.push((p.alpha, p.nu, p.k, m.fit.rate, m.initial_rate, m.fit.residual));
                emit_plot_data(
                    &PlotRecord::Decay {
                        samples: m.samples.clone(),
                        fit: Some(m.fit),
                    },
                    &out.join("decay"),
                    &format!("point_{i:03}"),
                )?;
            }
            Err(e) => failures.push(PointFailure {
                point: point_label(p),
                error: e.to_string(),
            }),
        }
    }
    write_rows(
        &out.join("rates.csv"),
        &["alpha", "nu", "k", "lambda_hat", "initial_rate", "fit_residual"],
        &rows,
    )?;

    let mut checks = Vec::new();
    let mut fits = Vec::new();
    for alpha in cfg.sweep_alphas() {
        let reference = reference_exponents(&u, alpha)?;
        let pts: Vec<(f64, f64, f64)> = rows
            .iter()
            .filter(|r| r.0 == alpha)
            .map(|r| (r.1, r.2.unsigned_abs() as f64, r.3))
            .collect();
        fits.push(exponent_checks(
            "decay rate",
            alpha,
            &pts,
            reference,
            cfg.acceptance.exponent_tolerance,
            &mut checks,
        ));
        let k0 = cfg.sweep.k[0];
        let curve: Vec<(f64, f64)> = rows.iter().filter(|r| r.0 == alpha && r.2 == k0).map(|r| (r.1, r.3)).collect();
        emit_plot_data(
            &PlotRecord::RateScaling {
                points: curve,
                slope: reference.0,
            },
            out,
            &format!("rate_scaling_alpha_{alpha}"),
        )?;
    }
    Ok(ScenarioSummary::new(
        ScenarioName::LinearDecaySweep,
        checks,
        failures,
        json!({ "fits": fits, "excluded": excluded_json(&excluded) }),
    ))
}

fn psi_options(cfg: &RunConfig) -> PsiOptions {
    PsiOptions {
        grid_points: cfg.linear.psi_grid_points,
        check_truncation: cfg.linear.check_truncation,
        ..PsiOptions::default()
    }
}

fn psi_points(cfg: &RunConfig, u: &ShearProfile, points: &[LinearPoint], workers: usize) -> Result<Vec<fracshear_core::Result<PsiResult>>> {
    let opts = psi_options(cfg);
    run_points(points, workers, |p| psi_bound_with(u, p.k, p.nu, p.alpha, cfg.linear.lmax, &opts))
}

fn psi_sweep(cfg: &RunConfig, out: &Path, workers: usize) -> Result<ScenarioSummary> {
    let u = cfg.physics.shear.profile()?;
    let (points, excluded) = linear_grid(&cfg.sweep_alphas(), &cfg.sweep_nus(), &cfg.sweep.k);
    let results = psi_points(cfg, &u, &points, workers)?;

    let mut ok: Vec<PsiResult> = Vec::new();
    let mut failures = Vec::new();
    let mut unconverged = Vec::new();
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(r) => {
                if !r.converged {
                    unconverged.push(point_label(p));
                }
                ok.push(r);
            }
            Err(e) => failures.push(PointFailure {
                point: point_label(p),
                error: e.to_string(),
            }),
        }
    }
    let rows: Vec<_> = ok
        .iter()
        .map(|r| (r.alpha, r.nu, r.k, r.psi, r.lambda_star, r.coarse_psi, r.psi_doubled, r.converged))
        .collect();
    write_rows(
        &out.join("psi.csv"),
        &["alpha", "nu", "k", "psi", "lambda_star", "coarse_psi", "psi_doubled", "converged"],
        &rows,
    )?;

    let mut checks = Vec::new();
    let mut fits = Vec::new();
    for alpha in cfg.sweep_alphas() {
        let reference = reference_exponents(&u, alpha)?;
        let conv: Vec<&PsiResult> = ok.iter().filter(|r| r.alpha == alpha && r.converged).collect();
        let pts: Vec<(f64, f64, f64)> = conv.iter().map(|r| (r.nu, r.k.unsigned_abs() as f64, r.psi)).collect();
        fits.push(exponent_checks(
            "psi",
            alpha,
            &pts,
            reference,
            cfg.acceptance.exponent_tolerance,
            &mut checks,
        ));
        emit_plot_data(
            &PlotRecord::PsiScaling {
                points: conv.iter().map(|r| (r.nu, r.k, r.psi)).collect(),
                slope_nu: reference.0,
                slope_k: reference.1,
            },
            out,
            &format!("psi_scaling_alpha_{alpha}"),
        )?;
    }
    Ok(ScenarioSummary::new(
        ScenarioName::PsiSweep,
        checks,
        failures,
        json!({ "fits": fits, "unconverged": unconverged, "excluded": excluded_json(&excluded) }),
    ))
}

/// `count` log-spaced times in `[lo, hi]`.
pub fn log_times(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count)
        .map(|j| lo * (hi / lo).powf(j as f64 / (count - 1) as f64))
        .collect()
}

fn gearhart_pruss(cfg: &RunConfig, out: &Path, workers: usize) -> Result<ScenarioSummary> {
    let u = cfg.physics.shear.profile()?;
    let (points, excluded) = linear_grid(&cfg.sweep_alphas(), &cfg.sweep_nus(), &cfg.sweep.k);
    let opts = psi_options(cfg);
    let lin = &cfg.linear;
    let reports = run_points(&points, workers, |p| -> fracshear_core::Result<_> {
        let psi = psi_bound_with(&u, p.k, p.nu, p.alpha, lin.lmax, &opts)?;
        if !psi.converged {
            return Ok(None);
        }
        let times = log_times(lin.gp_span[0] / psi.psi, lin.gp_span[1] / psi.psi, lin.gp_times);
        let op = build_mode_operator(&u, p.k, p.nu, p.alpha, lin.lmax)?;
        Ok(Some(gearhart_pruss_with(&op, psi.psi, &times)?))
    })?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut skipped = Vec::new();
    let mut violations = 0usize;
    let mut worst: f64 = 0.0;
    for (p, r) in points.iter().zip(reports) {
        match r {
            Ok(Some(rep)) => {
                violations += rep.violations.len();
                worst = worst.max(rep.max_ratio);
                for &(t, norm, bound) in &rep.samples {
                    rows.push((p.alpha, p.nu, p.k, rep.psi, t, norm, bound));
                }
            }
            Ok(None) => skipped.push(point_label(p)),
            Err(e) => failures.push(PointFailure {
                point: point_label(p),
                error: e.to_string(),
            }),
        }
    }
    write_rows(
        &out.join("gearhart_pruss.csv"),
        &["alpha", "nu", "k", "psi", "t", "semigroup_norm", "bound"],
        &rows,
    )?;
    let checks = vec![Check::at_most("semigroup bound violations", violations as f64, 0.0)];
    Ok(ScenarioSummary::new(
        ScenarioName::GearhartPruss,
        checks,
        failures,
        json!({
            "max_ratio": worst,
            "unconverged_skipped": skipped,
            "excluded": excluded_json(&excluded),
        }),
    ))
}

/// Decay rate of `‖e^{-tM}‖` for the `k = 1` mode at the configured `ν`, `α`.
pub fn linear_rate(cfg: &RunConfig, u: &ShearProfile) -> Result<f64> {
    let op = build_mode_operator(u, 1, cfg.nu(), cfg.physics.alpha, cfg.linear.lmax)?;
    let sampling = DecaySampling {
        samples: cfg.linear.decay_samples,
        floor: cfg.linear.decay_floor,
        ..DecaySampling::default()
    };
    Ok(measure_decay(&op, &sampling)?.fit.rate)
}

/// `run_simulation` with the worst max-principle value over all snapshots.
fn simulate_tracked(cfg: &RunConfig, n0: &SpectralField2D, t_end: f64) -> Result<(RunOutput, f64)> {
    let sim = cfg.sim_config()?.with_t_end(t_end);
    let alpha = cfg.physics.alpha;
    let mut worst = f64::INFINITY;
    let mut failure = None;
    let run = run_simulation_with(&sim, n0, |s| match max_principle_check(&s.n, alpha) {
        Ok(r) => worst = worst.min(r.lambda_at_max),
        Err(e) => failure = Some(e),
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    Ok((run, worst))
}

fn write_run(run: &RunOutput, out: &Path) -> Result<()> {
    write_diagnostics(&out.join("diagnostics.csv"), &run.record)?;
    write_json(&out.join("report.json"), &run.report)?;
    io::save_field(&out.join("final.snap"), &run.state.n, Some(run.state.t))?;
    emit_plot_data(&PlotRecord::ModeEnergy(run.record.clone()), out, "mode_energy")?;
    Ok(())
}

/// Plain run of `[physics]`/`[time]` from `[initial]` data; writes
/// diagnostics, the report, the final snapshot and mode-energy plot data.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<RunOutput> {
    echo_config(cfg, out)?;
    let n0 = initial_field(cfg)?;
    let sim = cfg.sim_config()?;
    let run = run_simulation_with(&sim, &n0, |_| {})?;
    write_run(&run, out)?;
    Ok(run)
}

fn suppression_demo(cfg: &RunConfig, out: &Path) -> Result<ScenarioSummary> {
    let u = cfg.physics.shear.profile()?;
    let n0 = initial_field(cfg)?;
    let lambda_lin = if u.is_zero() { None } else { Some(linear_rate(cfg, &u)?) };
    let base_horizon = match (cfg.time.t_end, lambda_lin) {
        (Some(t), _) => t,
        (None, Some(l)) => 10.0 / l,
        (None, None) => 1.0,
    };
    let (mut run, mut mp) = simulate_tracked(cfg, &n0, base_horizon)?;
    // the horizon counts from s₀, which is only known after a run
    if cfg.time.t_end.is_none() && run.report.completed() && run.report.s0 > 0.0 {
        (run, mp) = simulate_tracked(cfg, &n0, run.report.s0 + base_horizon)?;
    }
    write_run(&run, out)?;

    let report = &run.report;
    let mut checks = vec![
        Check::holds("run completed", report.completed()),
        Check::at_most("relative mass drift", report.mass_drift, 1e-10),
        Check::at_least("max-principle value at argmax", mp, -1e-8),
    ];
    let envelope = fit_nonzero_envelope(&run.record, report.s0);
    match (&envelope, lambda_lin) {
        (Ok(fit), Some(l)) => {
            checks.push(Check::at_least(
                "envelope rate over linear rate",
                fit.rate / l,
                cfg.acceptance.rate_fraction,
            ));
            let samples: Vec<(f64, f64)> = run
                .record
                .rows
                .iter()
                .filter(|r| r.t >= report.s0)
                .map(|r| (r.t - report.s0, r.l2_nonzero.powi(2)))
                .collect();
            let fit_shifted = fracshear_core::linear::DecayFit {
                window: (fit.window.0 - report.s0, fit.window.1 - report.s0),
                ..*fit
            };
            emit_plot_data(
                &PlotRecord::Decay {
                    samples,
                    fit: Some(fit_shifted),
                },
                out,
                "nonzero_envelope",
            )?;
        }
        (Err(_), Some(_)) => checks.push(Check::at_least(
            "envelope rate over linear rate",
            f64::NAN,
            cfg.acceptance.rate_fraction,
        )),
        _ => {}
    }
    let nu = cfg.nu();
    Ok(ScenarioSummary::new(
        ScenarioName::SuppressionDemo,
        checks,
        Vec::new(),
        json!({
            "status": report.status,
            "trip": report.trip,
            "lambda_linear": lambda_lin,
            "envelope": envelope.ok(),
            "s0": report.s0,
            "t0": report.t0,
            "horizon": report.horizon,
            "horizon_original_time": report.horizon / nu,
            "steps": report.steps,
            "rejected_steps": report.rejected_steps,
            "min_n": report.min_n,
            "negativity_flagged": report.negativity_flagged,
            "max_principle_min": mp,
        }),
    ))
}

/// Same configuration with the flow switched off and `ν`, `t_end` from `[blowup]`.
pub fn blowup_config(cfg: &RunConfig) -> Result<RunConfig> {
    let mut b = cfg.clone();
    b.physics.shear = ShearName::Zero;
    b.physics.nu = Some(cfg.blowup.nu);
    b.physics.amplitude = None;
    b.time.t_end = Some(cfg.blowup.t_end);
    b.resolve()?;
    Ok(b)
}

fn blowup_demo(cfg: &RunConfig, out: &Path) -> Result<ScenarioSummary> {
    let b = blowup_config(cfg)?;
    let n0 = initial_field(&b)?;
    let run = run_simulation_with(&b.sim_config()?, &n0, |_| {})?;
    write_run(&run, out)?;
    let report = &run.report;
    let dts: Vec<f64> = run.record.rows.iter().skip(1).map(|r| r.dt).collect();
    let dt_monotone = dts.windows(2).all(|w| w[1] <= w[0]);
    let trip_time = report.trip.as_ref().map_or(f64::NAN, |t| t.time);
    let checks = vec![
        Check::holds("monitor tripped", report.trip.is_some()),
        Check::at_most("trip time", trip_time, cfg.blowup.t_end),
    ];
    Ok(ScenarioSummary::new(
        ScenarioName::BlowupDemo,
        checks,
        Vec::new(),
        json!({
            "status": report.status,
            "trip": report.trip,
            "nu": cfg.blowup.nu,
            "horizon": report.horizon,
            "steps": report.steps,
            "rejected_steps": report.rejected_steps,
            "dt_nonincreasing": dt_monotone,
            "mass_drift": report.mass_drift,
            "last": report.last,
        }),
    ))
}

/// `cos x · exp(-4(1 - cos y))`, kept on the `k = ±1` columns only.
pub fn duhamel_field(cfg: &RunConfig) -> Result<SpectralField2D> {
    let f = SpectralField2D::from_fn(cfg.grid()?, |x, y| x.cos() * (-4.0 * (1.0 - y.cos())).exp());
    Ok(f.map_modes(|k, _, c| if k.abs() == 1 { c } else { 0.0.into() }))
}

fn duhamel_check(cfg: &RunConfig, out: &Path, workers: usize) -> Result<ScenarioSummary> {
    let u = cfg.physics.shear.profile()?;
    let d = &cfg.duhamel;
    let f0 = duhamel_field(cfg)?;
    let alpha = cfg.physics.alpha;
    let residuals = run_points(&d.nodes, workers, |&q| duhamel_identity_check(&f0, &u, d.nu, alpha, d.t, q, d.lmax))?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (&q, r) in d.nodes.iter().zip(&residuals) {
        match r {
            Ok(r) => rows.push((q, *r)),
            Err(e) => failures.push(PointFailure {
                point: format!("nodes={q}"),
                error: e.to_string(),
            }),
        }
    }
    write_rows(&out.join("duhamel.csv"), &["nodes", "residual"], &rows)?;
    let at_check = rows.iter().find(|r| r.0 == d.check_nodes).map_or(f64::NAN, |r| r.1);
    let increases = rows.windows(2).filter(|w| !(w[1].1 < w[0].1)).count();
    let checks = vec![
        Check::at_most(format!("residual at {} nodes", d.check_nodes), at_check, cfg.acceptance.duhamel_tolerance),
        Check::at_most("non-decreasing steps under node doubling", increases as f64 + failures.len() as f64, 0.0),
    ];
    Ok(ScenarioSummary::new(
        ScenarioName::DuhamelCheck,
        checks,
        failures,
        json!({ "residuals": rows, "nu": d.nu, "t": d.t, "lmax": d.lmax }),
    ))
}

/// States at `t* - dt`, `t*`, `t* + dt` with `t* = window`, for a fixed step `dt`.
fn energy_window(cfg: &RunConfig, n0: &SpectralField2D, dt: f64, window: f64) -> Result<Vec<SimState>> {
    let steps = (window / dt).round() as u64 + 1;
    let sim = cfg
        .sim_config()?
        .with_time_step(TimeStep::Fixed(dt))
        .with_t_end(steps as f64 * dt)
        .with_cadence(Cadence::Steps(1));
    let mut last: Vec<SimState> = Vec::with_capacity(4);
    let run = run_simulation_with(&sim, n0, |s| {
        if last.len() == 3 {
            last.remove(0);
        }
        last.push(s.clone());
    })?;
    if !run.report.completed() || last.len() < 3 {
        return Err(HarnessError::Core(CoreError::Numerical(format!(
            "energy window at dt = {dt} did not complete"
        ))));
    }
    Ok(last)
}

/// Order of the energy-identity residual under step halving, from windows
/// centred on the same time.
pub fn energy_residual_order(cfg: &RunConfig, n0: &SpectralField2D) -> Result<(f64, f64, f64)> {
    let dt = cfg.audit.dt;
    let sim = cfg.sim_config()?;
    let coarse = energy_identity_residual(&energy_window(cfg, n0, dt, cfg.audit.window)?, &sim)?;
    let fine = energy_identity_residual(&energy_window(cfg, n0, 0.5 * dt, cfg.audit.window)?, &sim)?;
    Ok((coarse, fine, (coarse / fine).log2()))
}

fn energy_audit(cfg: &RunConfig, out: &Path) -> Result<ScenarioSummary> {
    let n0 = initial_field(cfg)?;
    let a = &cfg.audit;
    let sim = cfg
        .sim_config()?
        .with_time_step(TimeStep::Fixed(a.dt))
        .with_t_end(a.steps as f64 * a.dt);
    let mut mass_exact = true;
    let m0 = n0.get(0, 0);
    let run = run_simulation_with(&sim, &n0, |s| mass_exact &= s.n.get(0, 0) == m0)?;
    write_run(&run, out)?;

    let residual = run
        .record
        .rows
        .iter()
        .filter_map(|r| r.energy_residual)
        .fold(f64::NAN, f64::max);
    let (coarse, fine, order) = energy_residual_order(cfg, &n0)?;
    let checks = vec![
        Check::holds("run completed", run.report.completed()),
        Check::at_least("steps taken", run.report.steps as f64, a.steps as f64),
        Check::at_most("relative mass drift", run.record.mass_drift(), 1e-10),
        Check::at_most("energy split defect", run.record.split_defect(), 1e-12),
        Check::at_most("energy identity residual", residual, cfg.acceptance.energy_tolerance),
        Check::at_least("energy identity order", order, cfg.acceptance.min_order),
    ];
    Ok(ScenarioSummary::new(
        ScenarioName::EnergyAudit,
        checks,
        Vec::new(),
        json!({
            "mean_mode_bit_identical": mass_exact,
            "steps": run.report.steps,
            "residual_dt": coarse,
            "residual_half_dt": fine,
            "order": order,
        }),
    ))
}

fn rel_diff(a: &SpectralField2D, b: &SpectralField2D) -> f64 {
    let den = b.l2_norm();
    if den == 0.0 {
        a.l2_norm()
    } else {
        a.rel_l2_distance(b)
    }
}

/// Coefficient of variation `σ/μ`.
fn cv(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

#[derive(Debug, Clone, Copy, Serialize)]
struct KernelSample {
    homogeneity_b1: f64,
    homogeneity_b2: f64,
    divergence: f64,
    lambda_at_max: f64,
}

fn kernel_sample(n: &SpectralField2D, c: f64, alpha: f64) -> Result<KernelSample> {
    let grid = *n.grid();
    let n0 = project_zero(n);
    let b1 = kernel_b1(&n0).scaled(c).to_2d(grid)?;
    let b1c = kernel_b1(&n0.scaled(c)).to_2d(grid)?;
    let nneq = project_nonzero(n);
    let (bx, by) = kernel_b2(&nneq)?;
    let (bxc, byc) = kernel_b2(&nneq.scaled(c))?;
    let homogeneity_b2 = rel_diff(&bxc, &bx.scaled(c)).max(rel_diff(&byc, &by.scaled(c)));

    let k = fracshear_core::kernels::attractive_kernel(n);
    let mut residual = div(&k.bx, &k.by)?;
    let mut fluct = n.clone();
    fluct.set(0, 0, 0.0.into());
    residual.axpy(1.0, &fluct);
    Ok(KernelSample {
        homogeneity_b1: rel_diff(&b1c, &b1),
        homogeneity_b2,
        divergence: residual.l2_norm() / fluct.l2_norm(),
        lambda_at_max: max_principle_check(n, alpha)?.lambda_at_max,
    })
}

fn kernel_props(cfg: &RunConfig, out: &Path, workers: usize) -> Result<ScenarioSummary> {
    let grid = cfg.grid()?;
    let alpha = cfg.physics.alpha;
    let kc = &cfg.kernel;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<(u64, f64)> = (0..kc.fields)
        .map(|_| {
            let scale = rng.random_range(0.1..10.0) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
            (rng.random(), scale)
        })
        .collect();
    let mass = 4.0 * PI * PI;
    let results = run_points(&seeds, workers, |&(seed, c)| -> Result<_> {
        let n = initial::random_band(grid, kc.band, 0.5, mass, seed)?;
        Ok((kernel_sample(&n, c, alpha)?, kernel_bound_ratios(&n)?))
    })?;

    let mut samples = Vec::with_capacity(results.len());
    let mut ratios = Vec::with_capacity(results.len());
    for r in results {
        let (s, b) = r?;
        samples.push(s);
        ratios.push(b);
    }
    let rows: Vec<_> = samples
        .iter()
        .zip(&ratios)
        .enumerate()
        .map(|(i, (s, b))| {
            let mut row = vec![i as f64, s.homogeneity_b1, s.homogeneity_b2, s.divergence, s.lambda_at_max];
            row.extend(b.dy_b1.iter().map(|r| r.1));
            row.push(b.b1_linf);
            row.extend(b.grad_b2.iter().map(|r| r.1));
            row.push(b.b2_linf);
            row
        })
        .collect();
    let header = [
        "field",
        "homogeneity_b1",
        "homogeneity_b2",
        "divergence_residual",
        "lambda_at_max",
        "dy_b1_p1",
        "dy_b1_p2",
        "dy_b1_p4",
        "dy_b1_pinf",
        "b1_linf",
        "grad_b2_p2",
        "grad_b2_p4",
        "b2_linf",
    ];
    write_rows(&out.join("kernel_props.csv"), &header, &rows)?;

    let worst = |f: fn(&KernelSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    let lowest = samples.iter().map(|s| s.lambda_at_max).fold(f64::INFINITY, f64::min);
    let mut constants = BTreeMap::new();
    let mut finite = true;
    for (j, name) in header[5..].iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[5 + j]).collect();
        finite &= col.iter().all(|v| v.is_finite());
        let max = col.iter().copied().fold(0.0, f64::max);
        constants.insert(*name, json!({ "max": max, "cv": cv(&col) }));
    }
    let checks = vec![
        Check::at_most("B1 homogeneity", worst(|s| s.homogeneity_b1), 1e-12),
        Check::at_most("B2 homogeneity", worst(|s| s.homogeneity_b2), 1e-12),
        Check::at_most("div B + (n - mean)", worst(|s| s.divergence), 1e-12),
        Check::at_least("max-principle value at argmax", lowest, -1e-8),
        Check::holds("bound ratios finite", finite),
    ];
    Ok(ScenarioSummary::new(
        ScenarioName::KernelProps,
        checks,
        Vec::new(),
        json!({ "fields": kc.fields, "band": kc.band, "ratios": constants }),
    ))
}
