//! The LMG Hamiltonian `H0 = Jz + γx/(2J−1)·Jx² + γy/(2J−1)·Jy²`, the kick
//! `K = Jz + Jx`, their spectra, and kick matrix elements in the `H0` basis.

use std::collections::BTreeMap;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spin::{AngularMomentumRep, HermitianOperator};

/// Relative gap below which two levels count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub j: f64,
    pub gamma_x: f64,
    pub gamma_y: f64,
    pub tau: f64,
    pub epsilon: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { j: 500.0, gamma_x: -0.95, gamma_y: 0.0, tau: 8.0, epsilon: 1e-3 }
    }
}

impl ModelParams {
    pub fn new(j: f64, gamma_x: f64, gamma_y: f64, tau: f64, epsilon: f64) -> Result<Self> {
        let p = Self { j, gamma_x, gamma_y, tau, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        AngularMomentumRep::new(self.j)?;
        if self.j < 1.0 {
            return Err(Error::InvalidParams(format!("j = {} < 1 (1/(2J-1) prefactor)", self.j)));
        }
        if !(self.gamma_x.is_finite() && self.gamma_y.is_finite()) {
            return Err(Error::InvalidParams("non-finite coupling".into()));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParams(format!("tau = {} must be positive", self.tau)));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidParams(format!("epsilon = {} must be non-negative", self.epsilon)));
        }
        Ok(())
    }

    pub fn rep(&self) -> Result<AngularMomentumRep> {
        AngularMomentumRep::new(self.j)
    }

    pub fn with_j(&self, j: f64) -> Self {
        Self { j, ..*self }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        Self { tau, ..*self }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..*self }
    }
}

/// Real `H0` in the Dicke basis. `Jx²` and `Jy²` only couple `m` to `m, m±2`.
pub fn h0_real(p: &ModelParams) -> Result<Mat<f64>> {
    p.validate()?;
    let rep = p.rep()?;
    let n = rep.dim();
    let gx = p.gamma_x / (2.0 * p.j - 1.0);
    let gy = p.gamma_y / (2.0 * p.j - 1.0);
    let a = |i: usize| rep.raising_element(i);
    let mut h = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        let below = if i > 0 { a(i - 1) } else { 0.0 };
        let diag_sq = (below * below + a(i) * a(i)) / 4.0;
        h[(i, i)] = rep.m(i) + (gx + gy) * diag_sq;
        if i + 2 < n {
            let off = a(i) * a(i + 1) / 4.0;
            let v = (gx - gy) * off;
            h[(i + 2, i)] = v;
            h[(i, i + 2)] = v;
        }
    }
    Ok(h)
}

/// Real `K = Jz + Jx` in the Dicke basis (tridiagonal).
pub fn kick_real(rep: AngularMomentumRep) -> Mat<f64> {
    let n = rep.dim();
    let mut k = Mat::<f64>::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = rep.m(i);
        if i + 1 < n {
            let v = rep.raising_element(i) / 2.0;
            k[(i + 1, i)] = v;
            k[(i, i + 1)] = v;
        }
    }
    k
}

pub fn build_h0(p: &ModelParams) -> Result<HermitianOperator> {
    HermitianOperator::from_real(p.rep()?, &h0_real(p)?)
}

pub fn build_kick(p: &ModelParams) -> Result<HermitianOperator> {
    p.validate()?;
    build_kick_for(p.rep()?)
}

/// Kick for any spin, including `j = 1/2` which the model itself rejects.
pub fn build_kick_for(rep: AngularMomentumRep) -> Result<HermitianOperator> {
    HermitianOperator::from_real(rep, &kick_real(rep))
}

/// Ascending eigenvalues with real eigenvectors in the Dicke basis.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub rep: AngularMomentumRep,
    pub energies: Vec<f64>,
    /// Column `k` pairs with `energies[k]`.
    pub vectors: Mat<f64>,
    /// Indices `k` with `E_{k+1} − E_k` below the degeneracy tolerance.
    pub degenerate_pairs: Vec<usize>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn j(&self) -> f64 {
        self.rep.j()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        linalg::column(&self.vectors, k)
    }

    /// Eigenvector `k` as a complex Dicke-basis state.
    pub fn state(&self, k: usize) -> Vec<faer::c64> {
        self.vectors.col(k).iter().map(|&x| faer::c64::new(x, 0.0)).collect()
    }

    pub fn min_gap(&self) -> f64 {
        self.energies.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.vectors.transpose() * &self.vectors;
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let t = if i == j { 1.0 } else { 0.0 };
                m = m.max((g[(i, j)] - t).abs());
            }
        }
        m
    }

    /// Largest `‖H v_k − E_k v_k‖₂` over all levels.
    pub fn residual(&self, h: &Mat<f64>) -> f64 {
        let hv = h * &self.vectors;
        let n = self.dim();
        let mut worst = 0.0f64;
        for k in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                let d = hv[(i, k)] - self.energies[k] * self.vectors[(i, k)];
                s += d * d;
            }
            worst = worst.max(s.sqrt());
        }
        worst
    }

    fn from_parts(rep: AngularMomentumRep, energies: Vec<f64>, mut vectors: Mat<f64>) -> Self {
        linalg::fix_signs(&mut vectors);
        let scale = energies.iter().fold(0.0f64, |a, e| a.max(e.abs())).max(1.0);
        let degenerate_pairs: Vec<usize> = energies
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] - w[0] < DEGENERACY_TOL * scale)
            .map(|(k, _)| k)
            .collect();
        if !degenerate_pairs.is_empty() {
            log::warn!("spectrum has {} near-degenerate pairs", degenerate_pairs.len());
        }
        Self { rep, energies, vectors, degenerate_pairs }
    }
}

/// Diagonalizes a Hermitian operator whose imaginary part vanishes.
pub fn diagonalize(op: &HermitianOperator) -> Result<Spectrum> {
    let scale = op.max_abs().max(1.0);
    let res = op.hermiticity_residual();
    if res > 1e-12 * scale {
        return Err(Error::NotHermitian(res));
    }
    let real = op.real_part(1e-14 * scale)?;
    diagonalize_real(op.rep(), &real)
}

pub fn diagonalize_real(rep: AngularMomentumRep, a: &Mat<f64>) -> Result<Spectrum> {
    if a.nrows() != rep.dim() {
        return Err(Error::DimensionMismatch(a.nrows(), rep.dim()));
    }
    let (e, v) = linalg::eigh(a)?;
    Ok(Spectrum::from_parts(rep, e, v))
}

/// Spectrum of `H0` using its `m`-parity block structure: even and odd `J+m`
/// never mix, so each block is diagonalized on its own and the results merged.
pub fn h0_spectrum(p: &ModelParams) -> Result<Spectrum> {
    let h = h0_real(p)?;
    let rep = p.rep()?;
    let n = rep.dim();
    let mut levels: Vec<(f64, usize, Vec<f64>)> = Vec::with_capacity(n);
    for parity in 0..2 {
        let idx: Vec<usize> = (parity..n).step_by(2).collect();
        if idx.is_empty() {
            continue;
        }
        let block = Mat::from_fn(idx.len(), idx.len(), |a, b| h[(idx[a], idx[b])]);
        let (e, v) = linalg::eigh(&block)?;
        for (c, &ec) in e.iter().enumerate() {
            levels.push((ec, parity, (0..idx.len()).map(|r| v[(r, c)]).collect()));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut vectors = Mat::<f64>::zeros(n, n);
    let mut energies = Vec::with_capacity(n);
    for (k, (e, parity, comp)) in levels.into_iter().enumerate() {
        energies.push(e);
        for (r, x) in comp.into_iter().enumerate() {
            vectors[(parity + 2 * r, k)] = x;
        }
    }
    Ok(Spectrum::from_parts(rep, energies, vectors))
}

/// Kick spectrum (`κ_l` ascending).
pub fn kick_spectrum(rep: AngularMomentumRep) -> Result<Spectrum> {
    diagonalize_real(rep, &kick_real(rep))
}

/// `K·x` for the tridiagonal kick, without forming the matrix.
pub fn kick_apply(rep: AngularMomentumRep, x: &[f64]) -> Vec<f64> {
    let n = rep.dim();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut s = rep.m(i) * x[i];
        if i > 0 {
            s += rep.raising_element(i - 1) / 2.0 * x[i - 1];
        }
        if i + 1 < n {
            s += rep.raising_element(i) / 2.0 * x[i + 1];
        }
        out[i] = s;
    }
    out
}

/// `⟨E_{k+o}|K|E_k⟩` for each offset; out-of-range offsets are reported per entry.
pub fn kick_matrix_elements(
    kick: &HermitianOperator,
    spec: &Spectrum,
    k: usize,
    offsets: &[i64],
) -> Result<BTreeMap<i64, Result<f64>>> {
    let n = spec.dim();
    if kick.dim() != n {
        return Err(Error::DimensionMismatch(kick.dim(), n));
    }
    if k >= n {
        return Err(Error::OutOfRange { index: k as i64, dim: n });
    }
    let kr = kick.real_part(1e-12)?;
    let kv = linalg::a_x(&kr, &spec.vector(k));
    let mut out = BTreeMap::new();
    for &o in offsets {
        let t = k as i64 + o;
        let entry = if t < 0 || t >= n as i64 {
            Err(Error::OutOfRange { index: t, dim: n })
        } else {
            let col = spec.vectors.col(t as usize);
            Ok((0..n).map(|i| col[i] * kv[i]).sum())
        };
        out.insert(o, entry);
    }
    Ok(out)
}

/// The kick written in the `H0` eigenbasis, `K_{ab} = ⟨E_a|K|E_b⟩`.
#[derive(Debug, Clone)]
pub struct KickMatrix {
    pub elements: Mat<f64>,
}

impl KickMatrix {
    pub fn new(spec: &Spectrum) -> Self {
        let n = spec.dim();
        let rep = spec.rep;
        let mut kv = Mat::<f64>::zeros(n, n);
        for c in 0..n {
            let col = kick_apply(rep, &spec.vector(c));
            for (i, x) in col.into_iter().enumerate() {
                kv[(i, c)] = x;
            }
        }
        let mut elements = spec.vectors.transpose() * &kv;
        for j in 0..n {
            for i in (j + 1)..n {
                let avg = 0.5 * (elements[(i, j)] + elements[(j, i)]);
                elements[(i, j)] = avg;
                elements[(j, i)] = avg;
            }
        }
        Self { elements }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.elements[(a, b)]
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    /// `(K²)_{ab}`.
    pub fn squared(&self, a: usize, b: usize) -> f64 {
        let n = self.dim();
        (0..n).map(|c| self.elements[(a, c)] * self.elements[(c, b)]).sum()
    }
}
