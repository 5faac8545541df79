use serde::{Deserialize, Serialize};

use super::diagnostics::DiagnosticsRow;
use crate::error::{Error, Result};
use crate::spectral::SpectralField2D;

/// Loss-of-regularity proxies checked after every accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupMonitor {
    /// Absolute L∞ ceiling; `None` means `1e4 ×` the initial L∞.
    pub linf_threshold: Option<f64>,
    /// Largest tolerated share of `‖n‖²` in the top third of the dealiased band.
    pub tail_fraction_threshold: f64,
    pub dt_floor: f64,
}

impl Default for BlowupMonitor {
    fn default() -> Self {
        Self {
            linf_threshold: None,
            tail_fraction_threshold: 0.1,
            dt_floor: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TripReason {
    DtCollapse,
    LinfThreshold,
    TailFraction,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub reason: TripReason,
    pub time: f64,
    pub value: f64,
    pub threshold: f64,
}

impl BlowupMonitor {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.linf_threshold {
            if !(t > 0.0) {
                return Err(Error::Parameter(format!("linf threshold {t} must be positive")));
            }
        }
        if !(self.tail_fraction_threshold > 0.0 && self.tail_fraction_threshold <= 1.0) {
            return Err(Error::Parameter(format!(
                "tail fraction threshold {} must lie in (0, 1]",
                self.tail_fraction_threshold
            )));
        }
        if !(self.dt_floor > 0.0) {
            return Err(Error::Parameter(format!("dt floor {} must be positive", self.dt_floor)));
        }
        Ok(())
    }

    pub fn linf_limit(&self, initial_linf: f64) -> f64 {
        self.linf_threshold.unwrap_or(1e4 * initial_linf)
    }

    pub fn check(&self, t: f64, linf: f64, tail: f64, initial_linf: f64) -> Option<Trip> {
        let limit = self.linf_limit(initial_linf);
        if !linf.is_finite() || !tail.is_finite() {
            return Some(Trip {
                reason: TripReason::NumericalFailure,
                time: t,
                value: f64::NAN,
                threshold: limit,
            });
        }
        if linf > limit {
            return Some(Trip {
                reason: TripReason::LinfThreshold,
                time: t,
                value: linf,
                threshold: limit,
            });
        }
        if tail > self.tail_fraction_threshold {
            return Some(Trip {
                reason: TripReason::TailFraction,
                time: t,
                value: tail,
                threshold: self.tail_fraction_threshold,
            });
        }
        None
    }

    pub fn dt_collapse(&self, t: f64, dt: f64) -> Option<Trip> {
        (dt < self.dt_floor).then_some(Trip {
            reason: TripReason::DtCollapse,
            time: t,
            value: dt,
            threshold: self.dt_floor,
        })
    }
}

/// Share of `Σ|n̂|²` carried by modes with `max(|k|/k_c, |l|/l_c) > 2/3`,
/// where `k_c = nx/3`, `l_c = ny/3` are the dealiasing cutoffs.
pub fn tail_fraction(n: &SpectralField2D) -> f64 {
    let g = n.grid();
    let (kc, lc) = (g.nx() as f64 / 3.0, g.ny() as f64 / 3.0);
    let mut tail = 0.0;
    let mut total = 0.0;
    for (idx, k, l) in g.modes() {
        let e = n.coeffs()[idx].norm_sqr();
        total += e;
        if (k.abs() as f64 / kc).max(l.abs() as f64 / lc) > 2.0 / 3.0 {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Tripped,
}

/// Outcome of a run, tripped or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub status: RunStatus,
    pub trip: Option<Trip>,
    /// Time reached without a monitor trip.
    pub horizon: f64,
    pub steps: u64,
    pub rejected_steps: u64,
    /// First time with `‖n‖² ≥ 4‖n₀‖²`, if any.
    pub t0: Option<f64>,
    /// `t₀/2`, or 0 when the bound never exits.
    pub s0: f64,
    pub min_n: f64,
    /// Set when `min n < -1e-3 ‖n₀‖∞` at some snapshot.
    pub negativity_flagged: bool,
    pub mass_drift: f64,
    pub last: Option<DiagnosticsRow>,
}

impl BlowupReport {
    pub fn completed(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;
    use num_complex::Complex64;

    #[test]
    fn tail_fraction_of_band_modes() {
        let g = TorusGrid::square(64).unwrap();
        // cutoffs are 21.3; the tail starts above |k| = 14.2
        let mut n = SpectralField2D::constant(g, 1.0);
        n.set(3, 2, Complex64::new(1.0, 0.0));
        n.set(-3, -2, Complex64::new(1.0, 0.0));
        assert_eq!(tail_fraction(&n), 0.0);
        n.set(15, 0, Complex64::new(1.0, 0.0));
        n.set(-15, 0, Complex64::new(1.0, 0.0));
        assert!((tail_fraction(&n) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn trip_priorities() {
        let m = BlowupMonitor::default();
        assert!(m.check(0.0, 1.0, 0.01, 1.0).is_none());
        assert_eq!(m.check(0.1, 2e4, 0.5, 1.0).unwrap().reason, TripReason::LinfThreshold);
        assert_eq!(m.check(0.1, 2.0, 0.5, 1.0).unwrap().reason, TripReason::TailFraction);
        assert_eq!(m.check(0.1, f64::NAN, 0.0, 1.0).unwrap().reason, TripReason::NumericalFailure);
        assert_eq!(m.dt_collapse(0.3, 1e-11).unwrap().reason, TripReason::DtCollapse);
        assert!(m.dt_collapse(0.3, 1e-9).is_none());
    }
}
