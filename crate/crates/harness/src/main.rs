use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fracshear_core::solver::fit_nonzero_envelope;
use fracshear_harness::emit::{emit_plot_data, read_diagnostics, PlotRecord};
use fracshear_harness::scenario::{self, ScenarioName, ScenarioSummary};
use fracshear_harness::{parse_config, HarnessError, Result, RunConfig};

#[derive(Parser)]
#[command(name = "fracshear", version, about = "Shear-flow suppression of aggregation: linear analysis and simulation")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweep points (0 = one per CPU).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the nonlinear equation from `[initial]` data.
    Simulate,
    /// Semigroup decay rates over the `[sweep]` grid.
    Linear,
    /// Pseudospectral bound over the `[sweep]` grid.
    Psi {
        /// Compare semigroup norms against the bound instead.
        #[arg(long)]
        gearhart_pruss: bool,
    },
    /// Property suites.
    Check {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Run a named scenario (default: `scenario` from the configuration).
    Sweep {
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Plot data from a diagnostics CSV.
    Plotdata {
        #[arg(long)]
        input: PathBuf,
        /// Start of the envelope fit.
        #[arg(long, default_value_t = 0.0)]
        s0: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Duhamel,
    Energy,
    Kernel,
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| HarnessError::Config("--config is required for this command".into()))?;
    let mut cfg = parse_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn report(summary: &ScenarioSummary) -> bool {
    for c in &summary.checks {
        println!(
            "{} {}: {:e} {:?} {:e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.kind,
            c.target
        );
    }
    for f in &summary.point_failures {
        println!("POINT-FAILURE {}: {}", f.point, f.error);
    }
    println!("{}: {}", summary.scenario, if summary.passed { "passed" } else { "failed" });
    summary.passed
}

fn plotdata(input: &Path, out: &Path, s0: f64) -> Result<bool> {
    let record = read_diagnostics(input)?;
    emit_plot_data(&PlotRecord::ModeEnergy(record.clone()), out, "mode_energy")?;
    let samples: Vec<(f64, f64)> = record
        .rows
        .iter()
        .filter(|r| r.t >= s0)
        .map(|r| (r.t - s0, r.l2_nonzero.powi(2)))
        .collect();
    let fit = fit_nonzero_envelope(&record, s0).ok().map(|mut f| {
        f.window = (f.window.0 - s0, f.window.1 - s0);
        f
    });
    emit_plot_data(&PlotRecord::Decay { samples, fit }, out, "nonzero_envelope")?;
    Ok(true)
}

fn run(cli: &Cli) -> Result<bool> {
    let name = match &cli.command {
        Command::Simulate => {
            let out = scenario::simulate(&load(cli)?, &cli.out)?;
            let r = &out.report;
            println!(
                "{:?} at t = {} after {} steps ({} rejected), mass drift {:.3e}",
                r.status, r.horizon, r.steps, r.rejected_steps, r.mass_drift
            );
            if let Some(t) = &r.trip {
                println!("trip: {:?} at t = {} (value {}, threshold {})", t.reason, t.time, t.value, t.threshold);
            }
            return Ok(true);
        }
        Command::Plotdata { input, s0 } => return plotdata(input, &cli.out, *s0),
        Command::Linear => ScenarioName::LinearDecaySweep,
        Command::Psi { gearhart_pruss: false } => ScenarioName::PsiSweep,
        Command::Psi { gearhart_pruss: true } => ScenarioName::GearhartPruss,
        Command::Check { suite: Suite::Duhamel } => ScenarioName::DuhamelCheck,
        Command::Check { suite: Suite::Energy } => ScenarioName::EnergyAudit,
        Command::Check { suite: Suite::Kernel } => ScenarioName::KernelProps,
        Command::Sweep { scenario: Some(s) } => s.parse().map_err(HarnessError::Config)?,
        Command::Sweep { scenario: None } => {
            let cfg = load(cli)?;
            cfg.scenario
                .ok_or_else(|| HarnessError::Config("no scenario given on the command line or in the configuration".into()))?
        }
    };
    let cfg = load(cli)?;
    Ok(report(&scenario::run_scenario(name, &cfg, &cli.out, cli.workers)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
