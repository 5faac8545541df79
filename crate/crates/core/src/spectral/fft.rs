//! Forward and inverse transforms between collocation samples and true
//! Fourier coefficients on nodes starting at `-π`.
//!
//! Forward: `c(k) = (1/n) Σ_a f(x_a) e^{-i k x_a}` with `x_a = -π + 2πa/n`,
//! i.e. the plain DFT times `(-1)^k / n`. Plans are cached per thread.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::TorusGrid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if forward {
            p.plan_fft_forward(n)
        } else {
            p.plan_fft_inverse(n)
        }
    })
}

#[inline]
fn sign(i: usize) -> f64 {
    if i % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// In-place transform along both axes of a row-major `nx × ny` buffer.
fn transform_2d(grid: &TorusGrid, data: &mut [Complex64], forward: bool) {
    let (nx, ny) = (grid.nx(), grid.ny());
    debug_assert_eq!(data.len(), nx * ny);
    // rows are contiguous: y-transforms in one batched call
    plan(ny, forward).process(data);

    let mut cols = vec![Complex64::new(0.0, 0.0); nx * ny];
    for i in 0..nx {
        for j in 0..ny {
            cols[j * nx + i] = data[i * ny + j];
        }
    }
    plan(nx, forward).process(&mut cols);
    for j in 0..ny {
        for i in 0..nx {
            data[i * ny + j] = cols[j * nx + i];
        }
    }
}

pub(crate) fn forward_2d(grid: &TorusGrid, samples: &mut [Complex64]) {
    transform_2d(grid, samples, true);
    let scale = 1.0 / grid.len() as f64;
    let ny = grid.ny();
    for (idx, c) in samples.iter_mut().enumerate() {
        *c *= scale * sign(idx / ny + idx % ny);
    }
}

pub(crate) fn inverse_2d(grid: &TorusGrid, coeffs: &mut [Complex64]) {
    let ny = grid.ny();
    for (idx, c) in coeffs.iter_mut().enumerate() {
        *c *= sign(idx / ny + idx % ny);
    }
    transform_2d(grid, coeffs, false);
}

pub(crate) fn forward_1d(samples: &mut [Complex64]) {
    let n = samples.len();
    plan(n, true).process(samples);
    let scale = 1.0 / n as f64;
    for (j, c) in samples.iter_mut().enumerate() {
        *c *= scale * sign(j);
    }
}

pub(crate) fn inverse_1d(coeffs: &mut [Complex64]) {
    for (j, c) in coeffs.iter_mut().enumerate() {
        *c *= sign(j);
    }
    plan(coeffs.len(), false).process(coeffs);
}
