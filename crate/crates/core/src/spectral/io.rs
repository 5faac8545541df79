//! Field snapshots: flat little-endian binary plus a JSON descriptor, and
//! CSV dumps of collocation samples.
//!
//! Binary layout: `nx: i64`, `ny: i64`, then `(re, im)` pairs of `f64` for
//! `k = -nx/2 .. nx/2-1` (outer) and `l = -ny/2 .. ny/2-1` (inner).

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::SpectralField2D;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

pub const FORMAT_NAME: &str = "fracshear-spectral-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub format: String,
    pub nx: usize,
    pub ny: usize,
    pub domain: String,
    pub ordering: String,
    pub normalization: String,
    pub mean: f64,
    pub l2_norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
}

impl FieldDescriptor {
    pub fn for_field(f: &SpectralField2D, time: Option<f64>) -> Self {
        Self {
            format: FORMAT_NAME.into(),
            nx: f.grid().nx(),
            ny: f.grid().ny(),
            domain: "[-pi,pi)^2".into(),
            ordering: "k ascending from -nx/2, then l ascending from -ny/2; (re, im) f64 little-endian".into(),
            normalization: "true Fourier coefficients, forward transform divided by nx*ny".into(),
            mean: f.mean(),
            l2_norm: f.l2_norm(),
            time,
        }
    }
}

fn signed_range(n: usize) -> impl Iterator<Item = i64> {
    let h = (n / 2) as i64;
    -h..h
}

pub fn encode_field(f: &SpectralField2D) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(16 + 16 * g.len());
    out.extend_from_slice(&(g.nx() as i64).to_le_bytes());
    out.extend_from_slice(&(g.ny() as i64).to_le_bytes());
    for k in signed_range(g.nx()) {
        for l in signed_range(g.ny()) {
            let c = f.get(k, l);
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<SpectralField2D> {
    let word = |i: usize| -> Result<[u8; 8]> {
        bytes
            .get(8 * i..8 * i + 8)
            .map(|s| s.try_into().unwrap())
            .ok_or_else(|| Error::Data(format!("field file truncated at word {i}")))
    };
    let nx = i64::from_le_bytes(word(0)?);
    let ny = i64::from_le_bytes(word(1)?);
    if nx <= 0 || ny <= 0 {
        return Err(Error::Data(format!("bad header {nx} x {ny}")));
    }
    let grid = TorusGrid::new(nx as usize, ny as usize)?;
    let expected = 16 + 16 * grid.len();
    if bytes.len() != expected {
        return Err(Error::Data(format!(
            "field file has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut field = SpectralField2D::zeros(grid);
    let mut w = 2;
    for k in signed_range(grid.nx()) {
        for l in signed_range(grid.ny()) {
            let re = f64::from_le_bytes(word(w)?);
            let im = f64::from_le_bytes(word(w + 1)?);
            field.set(k, l, Complex64::new(re, im));
            w += 2;
        }
    }
    Ok(field)
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `path` (binary) and `path` with a `.json` extension (descriptor).
pub fn save_field(path: &Path, f: &SpectralField2D, time: Option<f64>) -> Result<()> {
    fs::write(path, encode_field(f))?;
    let desc = FieldDescriptor::for_field(f, time);
    fs::write(sidecar_path(path), serde_json::to_vec_pretty(&desc)?)?;
    Ok(())
}

/// Reads a binary snapshot; the descriptor, when present, must agree on shape.
pub fn load_field(path: &Path) -> Result<SpectralField2D> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let field = decode_field(&bytes)?;
    let side = sidecar_path(path);
    if side.exists() {
        let desc: FieldDescriptor = serde_json::from_slice(&fs::read(side)?)?;
        if desc.nx != field.grid().nx() || desc.ny != field.grid().ny() {
            return Err(Error::Data(format!(
                "descriptor says {}x{}, binary holds {}x{}",
                desc.nx,
                desc.ny,
                field.grid().nx(),
                field.grid().ny()
            )));
        }
    }
    Ok(field)
}

/// Physical samples as `x,y,value` rows.
pub fn write_physical_csv<W: Write>(out: W, f: &SpectralField2D) -> Result<()> {
    let g = f.grid();
    let samples = f.to_physical();
    let mut w = BufWriter::new(out);
    writeln!(w, "x,y,value")?;
    for i in 0..g.nx() {
        for j in 0..g.ny() {
            writeln!(w, "{},{},{}", g.x_node(i), g.y_node(j), samples[i * g.ny() + j])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_exact() {
        let g = TorusGrid::new(16, 8).unwrap();
        let f = SpectralField2D::from_fn(g, |x, y| (x.cos() + 2.0 * y.sin()).exp());
        let back = decode_field(&encode_field(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn header_layout() {
        let g = TorusGrid::new(8, 16).unwrap();
        let mut f = SpectralField2D::zeros(g);
        f.set(-4, -8, Complex64::new(1.5, -2.0));
        let bytes = encode_field(&f);
        assert_eq!(i64::from_le_bytes(bytes[0..8].try_into().unwrap()), 8);
        assert_eq!(i64::from_le_bytes(bytes[8..16].try_into().unwrap()), 16);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 1.5);
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), -2.0);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let f = SpectralField2D::constant(TorusGrid::square(8).unwrap(), 1.0);
        let bytes = encode_field(&f);
        assert!(matches!(decode_field(&bytes[..bytes.len() - 8]), Err(Error::Data(_))));
    }

    #[test]
    fn save_and_load_with_descriptor() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.bin");
        let f = SpectralField2D::from_fn(TorusGrid::square(16).unwrap(), |x, y| 1.0 + 0.5 * (x + y).cos());
        save_field(&path, &f, Some(0.25)).unwrap();
        assert_eq!(load_field(&path).unwrap(), f);
        let desc: FieldDescriptor =
            serde_json::from_slice(&fs::read(path.with_extension("json")).unwrap()).unwrap();
        assert_eq!(desc.time, Some(0.25));
        assert!((desc.mean - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let f = SpectralField2D::constant(TorusGrid::square(8).unwrap(), 2.0);
        let mut buf = Vec::new();
        write_physical_csv(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 65);
        assert!(text.lines().nth(1).unwrap().ends_with(",2"));
    }
}
