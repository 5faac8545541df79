//! CSV / JSON writers and plot data: tidy CSV plus a gnuplot script stub per
//! figure.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use fracshear_core::linear::DecayFit;
use fracshear_core::solver::{DiagnosticsRecord, DiagnosticsRow};
use serde::Serialize;

use crate::error::{HarnessError, Result};

pub const DIAGNOSTICS_COLUMNS: [&str; 17] = [
    "t",
    "step",
    "dt",
    "mass",
    "l1",
    "l2",
    "linf",
    "l2_nonzero",
    "dissipation",
    "dissipation_nonzero",
    "l2_zero",
    "hdot_zero",
    "h1",
    "energy_residual",
    "min",
    "tail_fraction",
    "",
];

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    File::create(path).map_err(|e| HarnessError::io(path, e))
}

/// Header row first, so an empty table still names its columns.
pub fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(create(path)?);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f).map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

pub fn write_diagnostics(path: &Path, record: &DiagnosticsRecord) -> Result<()> {
    write_rows::<DiagnosticsRow>(path, &DIAGNOSTICS_COLUMNS[..16], &record.rows)
}

pub fn read_diagnostics(path: &Path) -> Result<DiagnosticsRecord> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<DiagnosticsRow>, _>>()?;
    Ok(DiagnosticsRecord { rows })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes()).map_err(|e| HarnessError::io(path, e))
}

/// Figure data accepted by [`emit_plot_data`].
#[derive(Debug, Clone)]
pub enum PlotRecord {
    /// `(t, ‖·‖)` samples and an optional fitted envelope.
    Decay {
        samples: Vec<(f64, f64)>,
        fit: Option<DecayFit>,
    },
    /// Fitted rates against `ν`, overlaid with a reference slope
    /// (`m/(m+α)` for flatness order `m`).
    RateScaling { points: Vec<(f64, f64)>, slope: f64 },
    /// `(ν, k, Ψ)` with reference slopes in ν and k (`m/(m+α)`, `α/(m+α)`).
    PsiScaling {
        points: Vec<(f64, i64, f64)>,
        slope_nu: f64,
        slope_k: f64,
    },
    /// `‖n⁰‖²` and `‖n≠‖²` over time.
    ModeEnergy(DiagnosticsRecord),
}

/// Writes `<name>.csv` and `<name>.gp` into `dir` (plus `<name>.fit.json`
/// for decay curves with a fit); returns the files written.
pub fn emit_plot_data(record: &PlotRecord, dir: &Path, name: &str) -> Result<Vec<PathBuf>> {
    let csv_path = dir.join(format!("{name}.csv"));
    let gp_path = dir.join(format!("{name}.gp"));
    let mut written = vec![csv_path.clone(), gp_path.clone()];
    let data = format!("{name}.csv");
    match record {
        PlotRecord::Decay { samples, fit } => {
            let rows: Vec<(f64, f64)> = samples.iter().filter(|s| s.1 > 0.0).map(|&(t, v)| (t, v.ln())).collect();
            write_rows(&csv_path, &["t", "log_norm"], &rows)?;
            let mut gp = format!(
                "set datafile separator ','\nset key autotitle columnhead\nset xlabel 't'\nset ylabel 'log norm'\n"
            );
            match fit {
                Some(f) => {
                    let p = dir.join(format!("{name}.fit.json"));
                    write_json(
                        &p,
                        &serde_json::json!({
                            "rate": f.rate,
                            "prefactor": f.prefactor,
                            "log_prefactor": f.prefactor.ln(),
                            "window": [f.window.0, f.window.1],
                            "residual": f.residual,
                        }),
                    )?;
                    written.push(p);
                    gp += &format!(
                        "plot '{data}' using 1:2 with points title 'data', {} - {} * x with lines title 'envelope'\n",
                        f.prefactor.ln(),
                        f.rate
                    );
                }
                None => gp += &format!("plot '{data}' using 1:2 with linespoints\n"),
            }
            write_text(&gp_path, &gp)?;
        }
        PlotRecord::RateScaling { points, slope } => {
            let rows: Vec<(f64, f64, f64)> = match points.first() {
                Some(&(nu0, r0)) => points.iter().map(|&(nu, r)| (nu, r, r0 * (nu / nu0).powf(*slope))).collect(),
                None => Vec::new(),
            };
            write_rows(&csv_path, &["nu", "lambda_hat", "reference"], &rows)?;
            write_text(
                &gp_path,
                &format!(
                    "set datafile separator ','\nset logscale xy\nset xlabel 'nu'\nset ylabel 'decay rate'\n\
                     plot '{data}' using 1:2 with points title 'measured', '' using 1:3 with lines title 'slope {slope:.4}'\n"
                ),
            )?;
        }
        PlotRecord::PsiScaling {
            points,
            slope_nu: a,
            slope_k: b,
        } => {
            let rows: Vec<(f64, i64, f64, f64, f64)> = match points.first() {
                Some(&(nu0, k0, p0)) => points
                    .iter()
                    .map(|&(nu, k, p)| {
                        (nu, k, p, p0 * (nu / nu0).powf(*a), p0 * (k as f64 / k0 as f64).abs().powf(*b))
                    })
                    .collect(),
                None => Vec::new(),
            };
            write_rows(&csv_path, &["nu", "k", "psi", "ref_nu", "ref_k"], &rows)?;
            write_text(
                &gp_path,
                &format!(
                    "set datafile separator ','\nset logscale xy\nset ylabel 'Psi'\n\
                     set multiplot layout 1,2\n\
                     set xlabel 'nu'\nplot '{data}' using 1:3 with points title 'Psi', '' using 1:4 with lines title 'slope {a:.4}'\n\
                     set xlabel 'k'\nplot '{data}' using 2:3 with points title 'Psi', '' using 2:5 with lines title 'slope {b:.4}'\n\
                     unset multiplot\n"
                ),
            )?;
        }
        PlotRecord::ModeEnergy(rec) => {
            let mut rows: Vec<(f64, &str, f64)> = Vec::with_capacity(2 * rec.rows.len());
            for r in &rec.rows {
                rows.push((r.t, "zero", r.l2_zero.powi(2)));
                rows.push((r.t, "nonzero", r.l2_nonzero.powi(2)));
            }
            write_rows(&csv_path, &["t", "component", "value"], &rows)?;
            write_text(
                &gp_path,
                &format!(
                    "set datafile separator ','\nset logscale y\nset xlabel 't'\nset ylabel 'energy'\n\
                     plot '< grep zero {data}' using 1:3 with lines title 'zero mode', \
                     '< grep nonzero {data}' using 1:3 with lines title 'nonzero modes'\n"
                ),
            )?;
        }
    }
    Ok(written)
}
