//! Dense complex matrix exponential: scaling and squaring around a
//! degree-13 Padé approximant (Higham 2005, θ₁₃ = 5.37).

use faer::linalg::solvers::Solve;
use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA_13: f64 = 5.371920351148152;

/// Induced 1-norm (largest absolute column sum).
pub fn norm_1(a: MatRef<'_, c64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `c0·I + c2·A2 + c4·A4 + c6·A6`.
fn even_combo(a2: &Mat<c64>, a4: &Mat<c64>, a6: &Mat<c64>, c: [f64; 4]) -> Mat<c64> {
    let n = a2.nrows();
    Mat::from_fn(n, n, |i, j| {
        let id = if i == j { c[0] } else { 0.0 };
        a2[(i, j)] * c[1] + a4[(i, j)] * c[2] + a6[(i, j)] * c[3] + c64::new(id, 0.0)
    })
}

/// `e^A` for a square complex matrix.
pub fn expm(a: MatRef<'_, c64>) -> Result<Mat<c64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Shape(format!("expm of a {}x{} matrix", n, a.ncols())));
    }
    let norm = norm_1(a);
    if !norm.is_finite() {
        return Err(Error::Numerical("expm argument is not finite".into()));
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);

    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * even_combo(&a2, &a4, &a6, [0.0, B13[9], B13[11], B13[13]])
        + even_combo(&a2, &a4, &a6, [B13[1], B13[3], B13[5], B13[7]]);
    let u = &a * &u_inner;
    let v = &a6 * even_combo(&a2, &a4, &a6, [0.0, B13[8], B13[10], B13[12]])
        + even_combo(&a2, &a4, &a6, [B13[0], B13[2], B13[4], B13[6]]);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.norm_max().is_finite() {
        return Err(Error::Numerical("expm produced non-finite entries".into()));
    }
    Ok(r)
}
