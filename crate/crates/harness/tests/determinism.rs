use std::path::Path;

use fracshear_harness::{run_scenario, RunConfig, ScenarioName};

const KERNEL: &str = r#"
seed = 11

[physics]
alpha = 1.2
nu = 0.01

[grid]
nx = 32
ny = 32

[kernel]
fields = 24
band = 4
"#;

const SIM: &str = r#"
[physics]
alpha = 1.5
nu = 0.02

[grid]
nx = 32
ny = 32

[time]
stepper = "exact-linear-strang"
dt_max = 0.05
t_end = 1.0
cadence = 0.1

[initial]
kind = "random-band"
mass = 20.0
amplitude = 0.3
band = 3
seed = 5
"#;

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn kernel_ensemble_is_bit_identical_across_worker_counts() {
    let cfg = RunConfig::from_toml(KERNEL).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let sa = run_scenario(ScenarioName::KernelProps, &cfg, a.path(), 1).unwrap();
    let sb = run_scenario(ScenarioName::KernelProps, &cfg, b.path(), 3).unwrap();
    assert!(sa.passed && sb.passed);
    assert_eq!(read(a.path(), "kernel_props.csv"), read(b.path(), "kernel_props.csv"));
    assert_eq!(read(a.path(), "summary.json"), read(b.path(), "summary.json"));

    let mut other = cfg.clone();
    other.seed = 12;
    let c = tempfile::tempdir().unwrap();
    run_scenario(ScenarioName::KernelProps, &other, c.path(), 1).unwrap();
    assert_ne!(read(a.path(), "kernel_props.csv"), read(c.path(), "kernel_props.csv"));
}

#[test]
fn simulation_output_is_bit_identical() {
    let cfg = RunConfig::from_toml(SIM).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = fracshear_harness::scenario::simulate(&cfg, a.path()).unwrap();
    fracshear_harness::scenario::simulate(&cfg, b.path()).unwrap();
    assert!(ra.report.completed());
    assert_eq!(ra.record.len(), 11);
    for f in ["diagnostics.csv", "report.json", "final.snap", "config.echo.toml"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
}

#[test]
fn initial_data_kinds() {
    let mut cfg = RunConfig::from_toml(SIM).unwrap();
    let f = fracshear_harness::scenario::initial_field(&cfg).unwrap();
    assert!((4.0 * std::f64::consts::PI.powi(2) * f.mean() - 20.0).abs() < 1e-8 * 20.0);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n0.snap");
    fracshear_core::spectral::io::save_field(&path, &f, Some(0.0)).unwrap();
    cfg.initial.kind = fracshear_harness::config::InitialKind::File;
    cfg.initial.path = Some(path);
    assert_eq!(fracshear_harness::scenario::initial_field(&cfg).unwrap(), f);

    cfg.grid.nx = 64;
    cfg.grid.ny = 64;
    let err = fracshear_harness::scenario::initial_field(&cfg).unwrap_err();
    assert!(err.is_usage(), "{err}");
}
