use std::collections::HashMap;

use super::config::{Cadence, SimConfig, StepperKind, TimeStep};
use super::diagnostics::{energy_identity_residual, DiagnosticsRecord, DiagnosticsRow};
use super::monitor::{tail_fraction, BlowupReport, RunStatus, Trip, TripReason};
use super::state::SimState;
use super::step::{adapt_dt, ifrk2, quantize_dt, strang, LinearFlow};
use crate::error::{Error, Result};
use crate::spectral::SpectralField2D;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: DiagnosticsRecord,
    pub state: SimState,
    pub report: BlowupReport,
}

/// Consecutive accepted steps before a rejection penalty is relaxed.
const RELAX_AFTER: u32 = 20;

fn check_initial(n0: &SpectralField2D) -> Result<f64> {
    if n0.hermitian_defect() > 1e-12 {
        return Err(Error::Precondition(format!(
            "initial data is not real (Hermitian defect {:.2e})",
            n0.hermitian_defect()
        )));
    }
    let s = n0.to_physical();
    let linf = s.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-12 * linf.max(1.0) {
        return Err(Error::Precondition(format!("initial data is negative (min {min:.3e})")));
    }
    if !(n0.mean() > 0.0) {
        return Err(Error::Precondition("initial mass must be positive".into()));
    }
    Ok(linf)
}

fn clip(n: &SpectralField2D) -> SpectralField2D {
    let s: Vec<f64> = n.to_physical().into_iter().map(|v| v.max(0.0)).collect();
    SpectralField2D::from_physical(*n.grid(), &s).expect("same grid")
}

/// Linear flows keyed by half step, so quantized steps reuse their exponentials.
struct FlowCache<'a> {
    cfg: &'a SimConfig,
    flows: HashMap<u64, LinearFlow>,
}

impl FlowCache<'_> {
    fn step(&mut self, state: &SimState, dt: f64, keep: bool) -> Result<(SimState, f64)> {
        match self.cfg.stepper {
            StepperKind::IfRk2 => ifrk2(state, self.cfg, dt),
            StepperKind::ExactLinearStrang => {
                let key = (0.5 * dt).to_bits();
                if let Some(flow) = self.flows.get(&key) {
                    return strang(state, self.cfg, flow);
                }
                let flow = LinearFlow::new(self.cfg, 0.5 * dt)?;
                let out = strang(state, self.cfg, &flow);
                if keep {
                    self.flows.insert(key, flow);
                }
                out
            }
        }
    }
}

pub fn run_simulation(cfg: &SimConfig, n0: &SpectralField2D) -> Result<RunOutput> {
    run_simulation_with(cfg, n0, |_| {})
}

/// Integrate to `cfg.t_end` or a monitor trip. `observe` sees every state
/// that is written to the diagnostics record.
pub fn run_simulation_with(
    cfg: &SimConfig,
    n0: &SpectralField2D,
    mut observe: impl FnMut(&SimState),
) -> Result<RunOutput> {
    cfg.validate()?;
    if *n0.grid() != cfg.grid {
        return Err(Error::Shape(format!(
            "initial data is {}x{}, configured grid is {}x{}",
            n0.grid().nx(),
            n0.grid().ny(),
            cfg.grid.nx(),
            cfg.grid.ny()
        )));
    }
    let initial_linf = check_initial(n0)?;
    let initial_energy = n0.l2_norm().powi(2);
    let mass0 = n0.mean();

    let mut cache = FlowCache {
        cfg,
        flows: HashMap::new(),
    };
    let mut state = SimState::new(n0.clone());
    let mut prev: Option<SimState> = None;
    let mut record = DiagnosticsRecord::default();

    let mut report = BlowupReport {
        status: RunStatus::Completed,
        trip: None,
        horizon: 0.0,
        steps: 0,
        rejected_steps: 0,
        t0: None,
        s0: 0.0,
        min_n: f64::INFINITY,
        negativity_flagged: false,
        mass_drift: 0.0,
        last: None,
    };

    let mut snapshot = |state: &SimState, record: &mut DiagnosticsRecord, report: &mut BlowupReport| {
        let row = DiagnosticsRow::measure(state, cfg.alpha);
        report.min_n = report.min_n.min(row.min);
        if row.min < -1e-3 * initial_linf {
            report.negativity_flagged = true;
        }
        record.rows.push(row);
        observe(state);
        record.rows.len() - 1
    };

    // row whose energy residual waits for the next state
    let idx = snapshot(&state, &mut record, &mut report);
    let mut pending = Some((idx, state.clone()));
    let mut next_output = match cfg.cadence {
        Cadence::Time(c) => c,
        Cadence::Steps(_) => f64::INFINITY,
    };

    let dt_max = match cfg.time_step {
        TimeStep::Fixed(dt) | TimeStep::Adaptive { max: dt } => dt,
    };
    let adaptive = matches!(cfg.time_step, TimeStep::Adaptive { .. });
    let mut penalty = 0i32;
    let mut streak = 0u32;

    while state.t < cfg.t_end {
        let mut dt = if adaptive {
            quantize_dt(adapt_dt(&state, cfg), dt_max) * 0.5f64.powi(penalty)
        } else {
            dt_max
        };
        if let Some(trip) = cfg.monitor.dt_collapse(state.t, dt) {
            report.trip = Some(trip);
            break;
        }
        let remaining = cfg.t_end - state.t;
        let mut is_last = false;
        let mut keep = true;
        if (remaining - dt).abs() <= 1e-9 * dt {
            is_last = true;
        } else if remaining < dt {
            dt = remaining;
            is_last = true;
            keep = false;
        }

        let outcome = cache.step(&state, dt, keep);
        let (mut next, change) = match outcome {
            Ok(v) => v,
            Err(Error::Numerical(_)) if adaptive => {
                report.rejected_steps += 1;
                penalty += 1;
                streak = 0;
                continue;
            }
            Err(Error::Numerical(_)) => {
                report.trip = Some(Trip {
                    reason: TripReason::NumericalFailure,
                    time: state.t,
                    value: f64::NAN,
                    threshold: 0.0,
                });
                break;
            }
            Err(e) => return Err(e),
        };
        if adaptive && change > cfg.max_rel_change {
            report.rejected_steps += 1;
            penalty += 1;
            streak = 0;
            continue;
        }
        streak += 1;
        if streak >= RELAX_AFTER && penalty > 0 {
            penalty -= 1;
            streak = 0;
        }
        if is_last {
            next.t = cfg.t_end;
        }
        if cfg.clip_negative {
            next.n = clip(&next.n);
        }

        // energy residual of the waiting row, from (prev, row state, next)
        if let Some((row, mid)) = pending.take() {
            if let Some(p) = prev.as_ref() {
                if p.step + 1 == mid.step && mid.last_dt == next.last_dt {
                    let w = [p.clone(), mid, next.clone()];
                    record.rows[row].energy_residual = energy_identity_residual(&w, cfg).ok();
                }
            }
        }

        let energy = next.n.l2_norm().powi(2);
        if report.t0.is_none() && energy >= 4.0 * initial_energy {
            report.t0 = Some(next.t);
        }

        prev = Some(state);
        state = next;
        report.steps = state.step;

        let samples_linf = state.n.norms().linf;
        let trip = cfg.monitor.check(state.t, samples_linf, tail_fraction(&state.n), initial_linf);

        let due = match cfg.cadence {
            Cadence::Steps(s) => state.step % s == 0,
            Cadence::Time(c) => {
                if state.t >= next_output - 1e-9 * c {
                    while next_output <= state.t + 1e-9 * c {
                        next_output += c;
                    }
                    true
                } else {
                    false
                }
            }
        };
        if due || is_last || trip.is_some() {
            let idx = snapshot(&state, &mut record, &mut report);
            pending = Some((idx, state.clone()));
        }
        if let Some(trip) = trip {
            report.trip = Some(trip);
            break;
        }
        report.horizon = state.t;
    }

    report.status = if report.trip.is_some() {
        RunStatus::Tripped
    } else {
        RunStatus::Completed
    };
    if report.trip.is_none() {
        report.horizon = state.t;
    }
    report.s0 = report.t0.map_or(0.0, |t| 0.5 * t);
    report.mass_drift = ((state.n.mean() - mass0) / mass0).abs();
    report.last = record.rows.last().cloned();
    Ok(RunOutput { record, state, report })
}
