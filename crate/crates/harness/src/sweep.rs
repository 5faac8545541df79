//! Bounded worker pool over independent scenario points.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HarnessError, Result};

/// One `(α, ν, k)` point of a linear sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearPoint {
    pub alpha: f64,
    pub nu: f64,
    pub k: i64,
}

/// Evaluates `f` on every point with at most `workers` threads (0 picks the
/// number of CPUs). Results come back in the order of `points`.
pub fn run_points<P, R, F>(points: &[P], workers: usize, f: F) -> Result<Vec<R>>
where
    P: Sync,
    R: Send,
    F: Fn(&P) -> R + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;
    Ok(pool.install(|| points.par_iter().map(&f).collect()))
}

/// Cartesian grid in declared order (α outermost, then ν, then k). Points
/// with `ν/|k| ≥ 1` fall outside the small-viscosity regime and are returned
/// separately.
pub fn linear_grid(alphas: &[f64], nus: &[f64], ks: &[i64]) -> (Vec<LinearPoint>, Vec<LinearPoint>) {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for &alpha in alphas {
        for &nu in nus {
            for &k in ks {
                let p = LinearPoint { alpha, nu, k };
                if nu / (k.unsigned_abs() as f64) < 1.0 {
                    kept.push(p);
                } else {
                    excluded.push(p);
                }
            }
        }
    }
    (kept, excluded)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_declared_order() {
        let pts: Vec<u64> = (0..64).collect();
        let out = run_points(&pts, 4, |&p| {
            // uneven work so completion order differs from input order
            std::thread::sleep(std::time::Duration::from_micros((64 - p) * 50));
            p * p
        })
        .unwrap();
        assert_eq!(out, pts.iter().map(|p| p * p).collect::<Vec<_>>());
    }

    #[test]
    fn grid_excludes_large_viscosity() {
        let (kept, excluded) = linear_grid(&[1.5], &[0.5, 2.0], &[1, 4]);
        assert_eq!(kept.len(), 3);
        assert_eq!(excluded, vec![LinearPoint { alpha: 1.5, nu: 2.0, k: 1 }]);
        assert_eq!(kept[0], LinearPoint { alpha: 1.5, nu: 0.5, k: 1 });
        assert_eq!(kept[2], LinearPoint { alpha: 1.5, nu: 2.0, k: 4 });
    }
}
