//! Angular-momentum matrices on the Dicke basis.
//!
//! Basis vectors are ordered by ascending magnetic number, `m = -j, ..., +j`,
//! so index `i` carries `m = i - j`. Operators are stored densely as complex
//! matrices even when they happen to be real.

use faer::{c64, Mat};

use crate::error::{Error, Result};

/// Largest dimension accepted unless a caller raises the cap.
pub const DEFAULT_DIM_CAP: usize = 8193;

/// Tolerance for the Hermiticity check on construction.
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AngularMomentumRep {
    twice_j: u32,
}

impl AngularMomentumRep {
    pub fn new(j: f64) -> Result<Self> {
        Self::with_cap(j, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(j: f64, cap: usize) -> Result<Self> {
        let twice = 2.0 * j;
        if !twice.is_finite() || twice < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::InvalidSpin(j));
        }
        let twice_j = twice.round() as u64;
        let dim = twice_j as usize + 1;
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(Self { twice_j: twice_j as u32 })
    }

    pub fn from_twice_j(twice_j: u32) -> Self {
        Self { twice_j }
    }

    pub fn j(&self) -> f64 {
        self.twice_j as f64 / 2.0
    }

    pub fn twice_j(&self) -> u32 {
        self.twice_j
    }

    pub fn dim(&self) -> usize {
        self.twice_j as usize + 1
    }

    /// Magnetic number of basis index `i`.
    pub fn m(&self, i: usize) -> f64 {
        i as f64 - self.j()
    }

    /// `<j, m+1| J+ |j, m>` for the basis index carrying `m`.
    pub fn raising_element(&self, i: usize) -> f64 {
        let j = self.j();
        let m = self.m(i);
        (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct HermitianOperator {
    rep: AngularMomentumRep,
    matrix: Mat<c64>,
}

impl HermitianOperator {
    /// Wraps a matrix after checking shape and Hermiticity.
    pub fn new(rep: AngularMomentumRep, matrix: Mat<c64>) -> Result<Self> {
        if matrix.nrows() != rep.dim() || matrix.ncols() != rep.dim() {
            return Err(Error::DimensionMismatch(matrix.nrows(), rep.dim()));
        }
        let op = Self { rep, matrix };
        let res = op.hermiticity_residual();
        if res > HERMITICITY_TOL * op.max_abs().max(1.0) {
            return Err(Error::NotHermitian(res));
        }
        Ok(op)
    }

    pub fn from_real(rep: AngularMomentumRep, real: &Mat<f64>) -> Result<Self> {
        Self::new(rep, Mat::from_fn(real.nrows(), real.ncols(), |i, j| c64::new(real[(i, j)], 0.0)))
    }

    pub fn identity(rep: AngularMomentumRep) -> Self {
        let n = rep.dim();
        let matrix = Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
        Self { rep, matrix }
    }

    pub fn rep(&self) -> AngularMomentumRep {
        self.rep
    }

    pub fn dim(&self) -> usize {
        self.rep.dim()
    }

    pub fn matrix(&self) -> &Mat<c64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<c64> {
        self.matrix
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j..n {
                let d = self.matrix[(i, j)] - self.matrix[(j, i)].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max(self.matrix[(i, j)].norm());
            }
        }
        worst
    }

    pub fn max_imag(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                worst = worst.max(self.matrix[(i, j)].im.abs());
            }
        }
        worst
    }

    /// Real part, provided the imaginary part is zero to `tol`.
    pub fn real_part(&self, tol: f64) -> Result<Mat<f64>> {
        let im = self.max_imag();
        if im > tol {
            return Err(Error::NotReal(im));
        }
        let n = self.dim();
        Ok(Mat::from_fn(n, n, |i, j| self.matrix[(i, j)].re))
    }

    /// `a·self + b·other` for real scalars.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.rep != other.rep {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        let n = self.dim();
        let matrix = Mat::from_fn(n, n, |i, j| self.matrix[(i, j)] * a + other.matrix[(i, j)] * b);
        Ok(Self { rep: self.rep, matrix })
    }

    pub fn scale(&self, a: f64) -> Self {
        let n = self.dim();
        Self { rep: self.rep, matrix: Mat::from_fn(n, n, |i, j| self.matrix[(i, j)] * a) }
    }

    /// `self²`, Hermitian for Hermitian `self`.
    pub fn square(&self) -> Self {
        let mut matrix = &self.matrix * &self.matrix;
        symmetrize(&mut matrix);
        Self { rep: self.rep, matrix }
    }

    /// Jordan product `(AB + BA)/2`.
    pub fn jordan(&self, other: &Self) -> Result<Self> {
        if self.rep != other.rep {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        let ab = &self.matrix * &other.matrix;
        let n = self.dim();
        let mut matrix = Mat::from_fn(n, n, |i, j| (ab[(i, j)] + ab[(j, i)].conj()) * 0.5);
        symmetrize(&mut matrix);
        Ok(Self { rep: self.rep, matrix })
    }
}

/// Forces exact Hermiticity after a product that is Hermitian in exact arithmetic.
fn symmetrize(m: &mut Mat<c64>) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)] = c64::new(m[(j, j)].re, 0.0);
        for i in (j + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// `(Jx, Jy, Jz)` for spin `j`.
pub fn angular_momentum_matrices(j: f64) -> Result<(HermitianOperator, HermitianOperator, HermitianOperator)> {
    let rep = AngularMomentumRep::new(j)?;
    Ok(matrices_for(rep))
}

pub fn matrices_for(rep: AngularMomentumRep) -> (HermitianOperator, HermitianOperator, HermitianOperator) {
    let n = rep.dim();
    let zero = c64::new(0.0, 0.0);
    let mut jx = Mat::from_fn(n, n, |_, _| zero);
    let mut jy = Mat::from_fn(n, n, |_, _| zero);
    let jz = Mat::from_fn(n, n, |i, j| if i == j { c64::new(rep.m(i), 0.0) } else { zero });
    for i in 0..n.saturating_sub(1) {
        // <m+1|J+|m> at row i+1, column i; J- is its transpose.
        let a = rep.raising_element(i);
        jx[(i + 1, i)] = c64::new(a / 2.0, 0.0);
        jx[(i, i + 1)] = c64::new(a / 2.0, 0.0);
        jy[(i + 1, i)] = c64::new(0.0, -a / 2.0);
        jy[(i, i + 1)] = c64::new(0.0, a / 2.0);
    }
    (
        HermitianOperator { rep, matrix: jx },
        HermitianOperator { rep, matrix: jy },
        HermitianOperator { rep, matrix: jz },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_half_integer() {
        assert!(matches!(AngularMomentumRep::new(0.3), Err(Error::InvalidSpin(_))));
        assert!(matches!(AngularMomentumRep::new(-1.0), Err(Error::InvalidSpin(_))));
        assert!(AngularMomentumRep::new(2.5).is_ok());
    }

    #[test]
    fn dimension_cap_is_enforced() {
        assert!(matches!(
            AngularMomentumRep::with_cap(10.0, 11),
            Err(Error::DimensionCap { dim: 21, cap: 11 })
        ));
        assert!(AngularMomentumRep::with_cap(5.0, 11).is_ok());
    }

    #[test]
    fn jy_is_imaginary() {
        let (jx, jy, _) = angular_momentum_matrices(3.0).unwrap();
        assert_eq!(jx.max_imag(), 0.0);
        assert!(jy.real_part(0.0).is_err());
    }
}
