use std::path::Path;
use std::process::Command;

fn fracshear(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fracshear")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

const ZERO_FLOW_PSI: &str = r#"
scenario = "psi-sweep"

[physics]
alpha = 1.5
nu = 1e-2
shear = "zero"

[sweep]
nu = [1e-1, 1e-2, 1e-3, 1e-4]
k = [1]

[linear]
lmax = 16
psi_grid_points = 41
"#;

#[test]
fn psi_sweep_on_zero_flow_has_unit_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "psi.toml", ZERO_FLOW_PSI);
    let out = dir.path().join("out");
    let (code, stdout, stderr) = fracshear(&["psi", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stdout}\n{stderr}");
    assert!(stdout.contains("PASS psi nu exponent"), "{stdout}");

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let a = summary["measurements"]["fits"][0]["fit"]["exponent_nu"].as_f64().unwrap();
    assert!((a - 1.0).abs() < 1e-9, "exponent {a}");
    // provenance
    assert!(out.join("config.echo.toml").exists());
    let version = std::fs::read_to_string(out.join("VERSION")).unwrap();
    assert!(version.starts_with("fracshear "));
    let echo = std::fs::read_to_string(out.join("config.echo.toml")).unwrap();
    assert!(echo.contains("alpha = 1.5"), "{echo}");
    let psi = std::fs::read_to_string(out.join("psi.csv")).unwrap();
    assert_eq!(psi.lines().count(), 5);
}

#[test]
fn failed_check_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "d.toml",
        r#"
[physics]
alpha = 1.5
nu = 0.05

[grid]
nx = 16
ny = 32

[duhamel]
lmax = 12
nodes = [4, 8]
check_nodes = 8

[acceptance]
duhamel_tolerance = 0.0
"#,
    );
    let (code, stdout, _) = fracshear(&["check", "duhamel", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 1, "{stdout}");
    assert!(stdout.contains("FAIL residual at 8 nodes"), "{stdout}");
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();

    let (code, _, stderr) = fracshear(&["linear", "--out", out]);
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("--config"));

    let bad = write(dir.path(), "bad.toml", "[physics]\nalpha = 2.5\nnu = 0.1\n");
    let (code, _, stderr) = fracshear(&["linear", "--config", &bad, "--out", out]);
    assert_eq!(code, 2);
    assert!(stderr.contains("(0, 2]"), "{stderr}");

    let unknown = write(dir.path(), "unknown.toml", "[physics]\nalpha = 1.5\nnu = 0.1\nviscosity = 3\n");
    let (code, _, stderr) = fracshear(&["linear", "--config", &unknown, "--out", out]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 4"), "{stderr}");

    let ok = write(dir.path(), "ok.toml", "[physics]\nalpha = 1.5\nnu = 0.1\n");
    let (code, _, stderr) = fracshear(&["sweep", "--scenario", "warp-drive", "--config", &ok, "--out", out]);
    assert_eq!(code, 2);
    assert!(stderr.contains("unknown scenario"), "{stderr}");

    let (code, _, stderr) = fracshear(&["sweep", "--config", &ok, "--out", out]);
    assert_eq!(code, 2, "{stderr}");

    let (code, _, _) = fracshear(&["frobnicate"]);
    assert_eq!(code, 2);
}

#[test]
fn simulate_then_plotdata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sim.toml",
        r#"
[physics]
alpha = 1.5
nu = 0.05

[grid]
nx = 16
ny = 16

[time]
dt = 0.01
t_end = 0.5
cadence_steps = 5

[initial]
kind = "gaussian-bump"
mass = 10.0
width = 0.8
"#,
    );
    let out = dir.path().join("sim");
    let (code, stdout, stderr) = fracshear(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.starts_with("Completed"), "{stdout}");
    for f in ["diagnostics.csv", "report.json", "final.snap", "final.json", "mode_energy.csv", "mode_energy.gp"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let diag = std::fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    // t = 0 plus every fifth of 50 steps
    assert_eq!(diag.lines().count(), 1 + 11);

    let plots = dir.path().join("plots");
    let (code, _, stderr) = fracshear(&[
        "plotdata",
        "--input",
        out.join("diagnostics.csv").to_str().unwrap(),
        "--out",
        plots.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stderr}");
    let env = std::fs::read_to_string(plots.join("nonzero_envelope.csv")).unwrap();
    assert!(env.starts_with("t,log_norm\n"));
    assert!(plots.join("nonzero_envelope.fit.json").exists());
}
