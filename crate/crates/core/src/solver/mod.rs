//! Time integration of the rescaled equation, blow-up monitoring and
//! run diagnostics.

mod config;
mod diagnostics;
pub mod initial;
mod monitor;
mod run;
mod state;
mod step;

pub use config::{resolve_nu, Cadence, SimConfig, StepperKind, TimeStep};
pub use diagnostics::{
    energy_identity_residual, fit_nonzero_envelope, max_principle_check, DiagnosticsRecord, DiagnosticsRow,
    MaxPrincipleReport,
};
pub use monitor::{tail_fraction, BlowupMonitor, BlowupReport, RunStatus, Trip, TripReason};
pub use run::{run_simulation, run_simulation_with, RunOutput};
pub use state::SimState;
pub use step::{
    adapt_dt, aggregation_limit, cfl_limit, quantize_dt, step_exact_linear_strang, step_ifrk2, LinearFlow,
};
