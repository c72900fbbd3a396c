//! Thin wrappers over the dense eigensolvers and a few matrix helpers.

use faer::linalg::matmul::triangular::{matmul as tri_matmul, BlockStructure};
use faer::{c64, Accum, Mat, Par, Side};

use crate::error::{Error, Result};

/// Real symmetric eigendecomposition, eigenvalues ascending.
pub fn eigh(a: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), Mat::zeros(0, 0)));
    }
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}; {}", condition_report(a))))?;
    let s = evd.S();
    let vals: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let vecs = Mat::from_fn(n, n, |r, c| u[(r, order[c])]);
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver(format!("non-finite eigenvalue; {}", condition_report(a))));
    }
    Ok((sorted, vecs))
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(a: &Mat<f64>) -> Result<Vec<f64>> {
    let mut v = a
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}; {}", condition_report(a))))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// General complex eigendecomposition (unordered).
pub fn eig_complex(a: &Mat<c64>) -> Result<(Vec<c64>, Mat<c64>)> {
    let n = a.nrows();
    let evd = a.eigen().map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let s = evd.S();
    let vals = (0..n).map(|i| s[i]).collect();
    let u = evd.U();
    Ok((vals, Mat::from_fn(n, n, |i, j| u[(i, j)])))
}

fn condition_report(a: &Mat<f64>) -> String {
    let n = a.nrows();
    let mut max = 0.0f64;
    let mut nonfinite = 0usize;
    for j in 0..n {
        for i in 0..n {
            let x = a[(i, j)];
            if x.is_finite() {
                max = max.max(x.abs());
            } else {
                nonfinite += 1;
            }
        }
    }
    format!("dim {n}, max |a_ij| {max:e}, non-finite entries {nonfinite}")
}

/// Flips column signs so that the largest-magnitude entry of every column is
/// positive. Near-ties resolve to the smallest row index.
pub fn fix_signs(v: &mut Mat<f64>) {
    for c in 0..v.ncols() {
        let mut best = 0.0f64;
        for r in 0..v.nrows() {
            best = best.max(v[(r, c)].abs());
        }
        let cut = best * (1.0 - 1e-10);
        let lead = (0..v.nrows()).find(|&r| v[(r, c)].abs() >= cut).unwrap_or(0);
        if v[(lead, c)] < 0.0 {
            for r in 0..v.nrows() {
                v[(r, c)] = -v[(r, c)];
            }
        }
    }
}

/// `L·diag(w)·Lᵀ`, filling only the lower triangle before mirroring.
pub fn congruence_diag(l: &Mat<f64>, w: &[f64]) -> Mat<f64> {
    let n = l.nrows();
    let scaled = Mat::from_fn(n, l.ncols(), |i, j| l[(i, j)] * w[j]);
    let mut out = Mat::<f64>::zeros(n, n);
    tri_matmul(
        out.as_mut(),
        BlockStructure::TriangularLower,
        Accum::Replace,
        scaled.as_ref(),
        BlockStructure::Rectangular,
        l.transpose(),
        BlockStructure::Rectangular,
        1.0,
        Par::Seq,
    );
    for j in 0..n {
        for i in (j + 1)..n {
            out[(j, i)] = out[(i, j)];
        }
    }
    out
}

pub fn max_abs_diff_real(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    m
}

pub fn max_abs_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

/// `max |AᴴA − I|`.
pub fn unitarity_residual(a: &Mat<c64>) -> f64 {
    let p = a.adjoint() * a;
    let n = a.nrows();
    let mut m = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            m = m.max((p[(i, j)] - c64::new(target, 0.0)).norm());
        }
    }
    m
}

pub fn to_complex(a: &Mat<f64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

pub fn column(a: &Mat<f64>, j: usize) -> Vec<f64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

pub fn column_c(a: &Mat<c64>, j: usize) -> Vec<c64> {
    (0..a.nrows()).map(|i| a[(i, j)]).collect()
}

/// `Aᵀx` for a real matrix.
pub fn at_x(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    (0..a.ncols())
        .map(|j| {
            let col = a.col(j);
            let mut s = 0.0;
            for i in 0..a.nrows() {
                s += col[i] * x[i];
            }
            s
        })
        .collect()
}

/// `Ax` for a real matrix.
pub fn a_x(a: &Mat<f64>, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows()];
    for j in 0..a.ncols() {
        let xj = x[j];
        if xj == 0.0 {
            continue;
        }
        let col = a.col(j);
        for i in 0..a.nrows() {
            out[i] += col[i] * xj;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn congruence_matches_plain_product() {
        let l = Mat::from_fn(7, 7, |i, j| ((i * 3 + j * 5) % 11) as f64 / 11.0 - 0.4);
        let w: Vec<f64> = (0..7).map(|i| (i as f64).cos()).collect();
        let scaled = Mat::from_fn(7, 7, |i, j| l[(i, j)] * w[j]);
        let plain = &scaled * l.transpose();
        assert!(max_abs_diff_real(&plain, &congruence_diag(&l, &w)) < 1e-14);
    }

    #[test]
    fn sign_convention_prefers_first_of_ties() {
        let mut v = Mat::from_fn(2, 1, |i, _| if i == 0 { -0.5f64.sqrt() } else { 0.5f64.sqrt() });
        fix_signs(&mut v);
        assert!(v[(0, 0)] > 0.0 && v[(1, 0)] < 0.0);
    }
}
