//! Floquet operator `F = exp(−iτH0)·exp(−iεK)` and its eigensystem.
//!
//! Two solvers live here. [`diagonalize_unitary`] takes any unitary matrix and
//! runs a general complex eigensolver. [`FloquetSetup`] is the workhorse for
//! sweeps: it works in the `H0` eigenbasis, where `F = D·W` with
//! `D = diag(e^{−iτE_n})` and `W = V e^{−iεκ} Vᵀ` for the real orthogonal
//! `V = U0ᵀU_K`. The similar matrix `S = D^{1/2} W D^{1/2}` is unitary and
//! complex symmetric, so its real and imaginary parts `A`, `B` are commuting
//! real symmetric matrices. One real symmetric eigensolve of `A`, plus a
//! small correction inside clusters where `cos φ` collides, yields real
//! eigenvectors `z` of `S`; the Floquet states are `f = D^{1/2} z`.

use std::f64::consts::TAU;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::lmg::Spectrum;
use crate::linalg;

/// Cluster width (in `cos φ`) inside which eigenvectors of `A` are re-resolved.
const CLUSTER_TOL: f64 = 1e-6;

/// Map an eigenvalue to its eigenphase in `[0, 2π)` with `λ = e^{−iφ}`.
pub fn eigenphase(lambda: c64) -> f64 {
    wrap_phase(-lambda.im.atan2(lambda.re))
}

pub fn wrap_phase(x: f64) -> f64 {
    let p = x.rem_euclid(TAU);
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Signed distance between two phases, folded into `(−π, π]`.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > std::f64::consts::PI {
        d - TAU
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateBasis {
    Dicke,
    H0Eigen,
}

#[derive(Debug, Clone)]
pub struct FloquetEigensystem {
    /// Ascending eigenphases in `[0, 2π)`.
    pub phases: Vec<f64>,
    /// Column `i` is the state with phase `phases[i]`.
    pub states: Mat<c64>,
    pub basis: StateBasis,
    /// `n*(i)` with respect to the basis the states are written in.
    pub association: Vec<usize>,
    /// `max_n |⟨n|f_i⟩|²`.
    pub fmax: Vec<f64>,
    pub tau: f64,
    pub epsilon: f64,
}

impl FloquetEigensystem {
    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn state(&self, i: usize) -> Vec<c64> {
        linalg::column_c(&self.states, i)
    }

    /// `‖F f_i − e^{−iφ_i} f_i‖₂`, worst over all states.
    pub fn eigen_residual(&self, f: &Mat<c64>) -> f64 {
        let fs = f * &self.states;
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            let lam = c64::cis(-self.phases[i]);
            let s: f64 = (0..n).map(|r| (fs[(r, i)] - lam * self.states[(r, i)]).norm_sqr()).sum();
            worst = worst.max(s.sqrt());
        }
        worst
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.states.adjoint() * &self.states;
        let n = self.dim();
        let mut m = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let t = if i == j { 1.0 } else { 0.0 };
                m = m.max((g[(i, j)] - c64::new(t, 0.0)).norm());
            }
        }
        m
    }

    /// Whether `association` is a bijection.
    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.dim()];
        for &a in &self.association {
            if seen[a] {
                return false;
            }
            seen[a] = true;
        }
        true
    }
}

/// Dense `F` in the Dicke basis from the two eigendecompositions.
pub fn build_floquet(h0: &Spectrum, kick: &Spectrum, tau: f64, epsilon: f64) -> Result<Mat<c64>> {
    let n = h0.dim();
    if kick.dim() != n {
        return Err(Error::DimensionMismatch(n, kick.dim()));
    }
    let u0 = linalg::to_complex(&h0.vectors);
    let uk = linalg::to_complex(&kick.vectors);
    let free = Mat::from_fn(n, n, |i, j| u0[(i, j)] * c64::cis(-tau * h0.energies[j]));
    let free = &free * u0.adjoint();
    let kicked = Mat::from_fn(n, n, |i, j| uk[(i, j)] * c64::cis(-epsilon * kick.energies[j]));
    let kicked = &kicked * uk.adjoint();
    Ok(&free * &kicked)
}

/// Dense `F` written in the `H0` eigenbasis.
pub fn build_floquet_h0_basis(h0: &Spectrum, kick: &Spectrum, tau: f64, epsilon: f64) -> Result<Mat<c64>> {
    let n = h0.dim();
    if kick.dim() != n {
        return Err(Error::DimensionMismatch(n, kick.dim()));
    }
    let v = h0.vectors.transpose() * &kick.vectors;
    let c = linalg::congruence_diag(&v, &kick.energies.iter().map(|k| (epsilon * k).cos()).collect::<Vec<_>>());
    let s = linalg::congruence_diag(&v, &kick.energies.iter().map(|k| (epsilon * k).sin()).collect::<Vec<_>>());
    Ok(Mat::from_fn(n, n, |i, j| c64::cis(-tau * h0.energies[i]) * c64::new(c[(i, j)], -s[(i, j)])))
}

/// General-purpose path: complex eigensolver plus re-orthogonalization inside
/// eigenvalue clusters. Association refers to the basis `f` is written in.
pub fn diagonalize_unitary(f: &Mat<c64>, basis: StateBasis, tau: f64, epsilon: f64) -> Result<FloquetEigensystem> {
    let n = f.nrows();
    if f.ncols() != n {
        return Err(Error::DimensionMismatch(n, f.ncols()));
    }
    let ures = linalg::unitarity_residual(f);
    if ures > 1e-8 {
        return Err(Error::NotUnitary(ures));
    }
    let (vals, vecs) = linalg::eig_complex(f)?;
    let worst = vals.iter().map(|l| (l.norm() - 1.0).abs()).fold(0.0f64, f64::max);
    if worst > 1e-8 {
        return Err(Error::NumericalInstability(worst));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let ph: Vec<f64> = vals.iter().map(|&l| eigenphase(l)).collect();
    order.sort_by(|&a, &b| ph[a].total_cmp(&ph[b]));
    let phases: Vec<f64> = order.iter().map(|&i| ph[i]).collect();
    let sorted_vals: Vec<c64> = order.iter().map(|&i| vals[i]).collect();
    let mut states = Mat::from_fn(n, n, |r, c| vecs[(r, order[c])]);

    // Clusters of consecutive phases, including the wrap at 2π.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut cur = vec![0usize];
    for i in 1..n {
        if (sorted_vals[i] - sorted_vals[i - 1]).norm() < 1e-9 {
            cur.push(i);
        } else {
            groups.push(std::mem::take(&mut cur));
            cur.push(i);
        }
    }
    groups.push(cur);
    if groups.len() > 1 && (sorted_vals[0] - sorted_vals[n - 1]).norm() < 1e-9 {
        let last = groups.pop().unwrap();
        groups[0].extend(last);
    }
    for g in &groups {
        gram_schmidt(&mut states, g);
    }
    for c in 0..n {
        normalize_and_gauge(&mut states, c);
    }
    let (association, fmax) = associate_columns(&states);
    Ok(FloquetEigensystem { phases, states, basis, association, fmax, tau, epsilon })
}

fn gram_schmidt(m: &mut Mat<c64>, cols: &[usize]) {
    let n = m.nrows();
    for (a, &ca) in cols.iter().enumerate() {
        for &cb in &cols[..a] {
            let mut dot = c64::new(0.0, 0.0);
            for r in 0..n {
                dot += m[(r, cb)].conj() * m[(r, ca)];
            }
            for r in 0..n {
                let t = m[(r, cb)] * dot;
                m[(r, ca)] -= t;
            }
        }
        let norm: f64 = (0..n).map(|r| m[(r, ca)].norm_sqr()).sum::<f64>().sqrt();
        for r in 0..n {
            m[(r, ca)] = m[(r, ca)] / norm;
        }
    }
}

/// Unit norm, largest component real positive.
fn normalize_and_gauge(m: &mut Mat<c64>, c: usize) {
    let n = m.nrows();
    let norm: f64 = (0..n).map(|r| m[(r, c)].norm_sqr()).sum::<f64>().sqrt();
    let mut best = 0.0f64;
    for r in 0..n {
        best = best.max(m[(r, c)].norm());
    }
    let lead = (0..n).find(|&r| m[(r, c)].norm() >= best * (1.0 - 1e-10)).unwrap_or(0);
    let ph = m[(lead, c)];
    let rot = ph.conj() / (ph.norm() * norm);
    for r in 0..n {
        m[(r, c)] = m[(r, c)] * rot;
    }
}

fn associate_columns(states: &Mat<c64>) -> (Vec<usize>, Vec<f64>) {
    let n = states.ncols();
    let mut assoc = Vec::with_capacity(n);
    let mut fmax = Vec::with_capacity(n);
    for c in 0..n {
        let (mut bi, mut bv) = (0usize, -1.0f64);
        for r in 0..states.nrows() {
            let w = states[(r, c)].norm_sqr();
            if w > bv {
                bi = r;
                bv = w;
            }
        }
        assoc.push(bi);
        fmax.push(bv);
    }
    (assoc, fmax)
}

/// Association with respect to the `H0` levels, whatever basis `fe` uses.
pub fn associate_states(fe: &FloquetEigensystem, h0: &Spectrum) -> Result<(Vec<usize>, Vec<f64>, bool)> {
    if fe.dim() != h0.dim() {
        return Err(Error::DimensionMismatch(fe.dim(), h0.dim()));
    }
    let (a, f) = match fe.basis {
        StateBasis::H0Eigen => (fe.association.clone(), fe.fmax.clone()),
        StateBasis::Dicke => {
            let u0t = linalg::to_complex(&h0.vectors.transpose().to_owned());
            associate_columns(&(&u0t * &fe.states))
        }
    };
    let mut seen = vec![false; a.len()];
    let injective = a.iter().all(|&x| !std::mem::replace(&mut seen[x], true));
    Ok((a, f, injective))
}

#[derive(Debug, Clone)]
pub struct BranchMatch {
    /// `perm[i]` is the index in `next` continuing state `i` of `prev`.
    pub perm: Vec<usize>,
    pub overlaps: Vec<f64>,
    pub min_overlap: f64,
}

/// Greedy max-overlap matching between consecutive eigensystems.
pub fn track_branch(prev: &FloquetEigensystem, next: &FloquetEigensystem) -> Result<BranchMatch> {
    if prev.dim() != next.dim() {
        return Err(Error::DimensionMismatch(prev.dim(), next.dim()));
    }
    if prev.basis != next.basis {
        return Err(Error::Invalid("eigensystems written in different bases".into()));
    }
    let o = prev.states.adjoint() * &next.states;
    let n = prev.dim();
    let w = Mat::from_fn(n, n, |i, j| o[(i, j)].norm_sqr());
    let m = greedy_match(&w);
    if m.min_overlap < 0.5 {
        log::warn!("branch tracking: minimum matched overlap {:.3} (step in eps too large)", m.min_overlap);
    }
    Ok(m)
}

pub(crate) fn greedy_match(w: &Mat<f64>) -> BranchMatch {
    let n = w.nrows();
    let floor = 1e-3 / n as f64;
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if w[(i, j)] > floor {
                pairs.push((w[(i, j)], i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut perm = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (_, i, j) in pairs {
        if perm[i] == usize::MAX && !taken[j] {
            perm[i] = j;
            taken[j] = true;
        }
    }
    let mut free = (0..n).filter(|&j| !taken[j]);
    for p in perm.iter_mut() {
        if *p == usize::MAX {
            *p = free.next().expect("column count matches row count");
        }
    }
    let overlaps: Vec<f64> = (0..n).map(|i| w[(i, perm[i])]).collect();
    let min_overlap = overlaps.iter().cloned().fold(1.0f64, f64::min);
    BranchMatch { perm, overlaps, min_overlap }
}

/// Precomputed pieces for repeated solves at fixed `(J, τ)`.
#[derive(Debug)]
pub struct FloquetSetup {
    pub h0: Arc<Spectrum>,
    pub tau: f64,
    kappa: Vec<f64>,
    v: Mat<f64>,
    half: Vec<c64>,
    solves: AtomicUsize,
}

/// Real eigenvectors `z` of the symmetrized operator, in the `H0` basis.
#[derive(Debug, Clone)]
pub struct FloquetSolution {
    pub epsilon: f64,
    pub z: Mat<f64>,
    /// `cos φ` per column.
    pub cos_phi: Vec<f64>,
    /// Eigenphases per column, when requested.
    pub phases: Option<Vec<f64>>,
}

impl FloquetSolution {
    pub fn dim(&self) -> usize {
        self.z.nrows()
    }

    /// `|⟨E_n|f_j⟩|²`.
    pub fn weight(&self, n: usize, j: usize) -> f64 {
        let x = self.z[(n, j)];
        x * x
    }

    /// `(n*, F_max)` of column `j`, ties toward smaller `n`.
    pub fn fmax(&self, j: usize) -> (usize, f64) {
        let col = self.z.col(j);
        let (mut bi, mut bv) = (0usize, -1.0f64);
        for n in 0..self.dim() {
            let w = col[n] * col[n];
            if w > bv {
                bi = n;
                bv = w;
            }
        }
        (bi, bv)
    }

    /// `1 − |⟨E_n|f_j⟩|²` summed from the small components for accuracy.
    pub fn one_minus_weight(&self, n: usize, j: usize) -> f64 {
        let col = self.z.col(j);
        (0..self.dim()).filter(|&r| r != n).map(|r| col[r] * col[r]).sum()
    }

    /// Column with the largest weight on level `n`.
    pub fn column_for_level(&self, n: usize) -> usize {
        let row = self.z.row(n);
        let (mut bj, mut bv) = (0usize, -1.0f64);
        for j in 0..self.dim() {
            let w = row[j] * row[j];
            if w > bv {
                bj = j;
                bv = w;
            }
        }
        bj
    }

    pub fn participation_ratio(&self, j: usize) -> f64 {
        let col = self.z.col(j);
        let s: f64 = (0..self.dim()).map(|r| col[r].powi(4)).sum();
        1.0 / s
    }

    /// `⟨f_j|H0|f_j⟩`.
    pub fn h0_expectation(&self, j: usize, energies: &[f64]) -> f64 {
        let col = self.z.col(j);
        (0..self.dim()).map(|r| energies[r] * col[r] * col[r]).sum()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        linalg::column(&self.z, j)
    }

    /// Index of the column with the largest `|⟨x|z_j⟩|²`, and that overlap.
    pub fn best_match(&self, x: &[f64]) -> (usize, f64) {
        let dots = linalg::at_x(&self.z, x);
        let (mut bj, mut bv) = (0usize, -1.0f64);
        for (j, d) in dots.into_iter().enumerate() {
            if d * d > bv {
                bj = j;
                bv = d * d;
            }
        }
        (bj, bv)
    }
}

impl FloquetSetup {
    pub fn new(h0: Arc<Spectrum>, kick: &Spectrum, tau: f64) -> Result<Self> {
        let n = h0.dim();
        if kick.dim() != n {
            return Err(Error::DimensionMismatch(n, kick.dim()));
        }
        let v = h0.vectors.transpose() * &kick.vectors;
        let half = h0.energies.iter().map(|&e| c64::cis(-0.5 * tau * e)).collect();
        Ok(Self { h0, tau, kappa: kick.energies.clone(), v, half, solves: AtomicUsize::new(0) })
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    /// Number of Floquet diagonalizations performed so far.
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    /// `D^{1/2}` entries, so that `f = half ∘ z`.
    pub fn half_phases(&self) -> &[c64] {
        &self.half
    }

    fn parts(&self, epsilon: f64) -> (Mat<f64>, Mat<f64>) {
        let n = self.dim();
        let cw: Vec<f64> = self.kappa.iter().map(|k| (epsilon * k).cos()).collect();
        let sw: Vec<f64> = self.kappa.iter().map(|k| (epsilon * k).sin()).collect();
        let c = linalg::congruence_diag(&self.v, &cw);
        let s = linalg::congruence_diag(&self.v, &sw);
        let mut a = Mat::<f64>::zeros(n, n);
        let mut b = Mat::<f64>::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                let h = self.half[i] * self.half[j];
                a[(i, j)] = h.re * c[(i, j)] + h.im * s[(i, j)];
                b[(i, j)] = h.im * c[(i, j)] - h.re * s[(i, j)];
            }
        }
        (a, b)
    }

    /// One Floquet diagonalization at kick strength `epsilon`.
    pub fn solve(&self, epsilon: f64, with_phases: bool) -> Result<FloquetSolution> {
        self.solves.fetch_add(1, Ordering::Relaxed);
        let (a, b) = self.parts(epsilon);
        let (mut cos_phi, mut z) = linalg::eigh(&a)?;
        resolve_clusters(&a, &b, &mut cos_phi, &mut z);
        let phases = if with_phases {
            let bz = &b * &z;
            let n = self.dim();
            Some(
                (0..n)
                    .map(|j| {
                        let sin = -(0..n).map(|r| z[(r, j)] * bz[(r, j)]).sum::<f64>();
                        wrap_phase(sin.atan2(cos_phi[j]))
                    })
                    .collect(),
            )
        } else {
            None
        };
        Ok(FloquetSolution { epsilon, z, cos_phi, phases })
    }

    /// Full eigensystem in the `H0` basis, sorted by phase.
    pub fn eigensystem(&self, epsilon: f64) -> Result<FloquetEigensystem> {
        let sol = self.solve(epsilon, true)?;
        Ok(self.to_eigensystem(&sol))
    }

    pub fn to_eigensystem(&self, sol: &FloquetSolution) -> FloquetEigensystem {
        let n = self.dim();
        let ph = sol.phases.clone().unwrap_or_else(|| sol.cos_phi.iter().map(|c| c.clamp(-1.0, 1.0).acos()).collect());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| ph[a].total_cmp(&ph[b]));
        let phases = order.iter().map(|&i| ph[i]).collect();
        let mut states = Mat::from_fn(n, n, |r, c| self.half[r] * sol.z[(r, order[c])]);
        for c in 0..n {
            normalize_and_gauge(&mut states, c);
        }
        let (association, fmax) = associate_columns(&states);
        FloquetEigensystem { phases, states, basis: StateBasis::H0Eigen, association, fmax, tau: self.tau, epsilon: sol.epsilon }
    }

    /// Floquet state `j` of a solution, written in the Dicke basis.
    pub fn dicke_state(&self, sol: &FloquetSolution, j: usize) -> Vec<c64> {
        let n = self.dim();
        let f: Vec<c64> = (0..n).map(|r| self.half[r] * sol.z[(r, j)]).collect();
        let u0 = &self.h0.vectors;
        (0..n)
            .map(|i| {
                let mut s = c64::new(0.0, 0.0);
                for r in 0..n {
                    s += f[r] * u0[(i, r)];
                }
                s
            })
            .collect()
    }
}

/// Re-resolves eigenvectors of `A` inside clusters of nearly equal `cos φ`,
/// where `A` alone cannot separate the true eigenvectors of `A + iB`.
fn resolve_clusters(a: &Mat<f64>, b: &Mat<f64>, vals: &mut [f64], z: &mut Mat<f64>) {
    let n = vals.len();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && vals[j + 1] - vals[j] < CLUSTER_TOL {
            j += 1;
        }
        if j > i {
            let cols: Vec<usize> = (i..=j).collect();
            rotate_within(b, z, &cols);
            // Sub-groups still degenerate in sin φ: separate by the phase itself.
            let bd = projected(b, z, &cols);
            let mut s = 0;
            while s < cols.len() {
                let mut e = s;
                while e + 1 < cols.len() && (bd[(e + 1, e + 1)] - bd[(e, e)]).abs() < CLUSTER_TOL {
                    e += 1;
                }
                if e > s {
                    let sub: Vec<usize> = cols[s..=e].to_vec();
                    let ad = projected(a, z, &sub);
                    let bs = projected(b, z, &sub);
                    let g = sub.len() as f64;
                    let ca = (0..sub.len()).map(|t| ad[(t, t)]).sum::<f64>() / g;
                    let sa = -(0..sub.len()).map(|t| bs[(t, t)]).sum::<f64>() / g;
                    let phi = sa.atan2(ca);
                    let r = Mat::from_fn(sub.len(), sub.len(), |p, q| phi.sin() * ad[(p, q)] + phi.cos() * bs[(p, q)]);
                    apply_rotation(z, &sub, &r);
                }
                s = e + 1;
            }
            let ad = projected(a, z, &cols);
            for (t, &c) in cols.iter().enumerate() {
                vals[c] = ad[(t, t)];
            }
        }
        i = j + 1;
    }
}

/// `Z_cᵀ M Z_c` for the listed columns.
fn projected(m: &Mat<f64>, z: &Mat<f64>, cols: &[usize]) -> Mat<f64> {
    let g = cols.len();
    let mz: Vec<Vec<f64>> = cols.iter().map(|&c| linalg::a_x(m, &linalg::column(z, c))).collect();
    let mut p = Mat::from_fn(g, g, |r, c| {
        let zr = z.col(cols[r]);
        (0..z.nrows()).map(|i| zr[i] * mz[c][i]).sum()
    });
    for c in 0..g {
        for r in (c + 1)..g {
            let avg = 0.5 * (p[(r, c)] + p[(c, r)]);
            p[(r, c)] = avg;
            p[(c, r)] = avg;
        }
    }
    p
}

fn rotate_within(m: &Mat<f64>, z: &mut Mat<f64>, cols: &[usize]) {
    let p = projected(m, z, cols);
    apply_rotation(z, cols, &p);
}

/// Diagonalizes the small symmetric `p` and rotates the listed columns of `z`.
fn apply_rotation(z: &mut Mat<f64>, cols: &[usize], p: &Mat<f64>) {
    let Ok((_, r)) = linalg::eigh(p) else { return };
    let n = z.nrows();
    let g = cols.len();
    let old: Vec<Vec<f64>> = cols.iter().map(|&c| linalg::column(z, c)).collect();
    for (t, &c) in cols.iter().enumerate() {
        for i in 0..n {
            z[(i, c)] = (0..g).map(|s| old[s][i] * r[(s, t)]).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_wraps_into_range() {
        assert_eq!(eigenphase(c64::new(1.0, 0.0)), 0.0);
        let p = eigenphase(c64::new(1.0, 1e-17));
        assert!((0.0..TAU).contains(&p));
        assert!((eigenphase(c64::cis(-0.3)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn greedy_match_resolves_conflicts_by_overlap() {
        let w = Mat::from_fn(2, 2, |i, j| [[0.9, 0.8], [0.95, 0.1]][i][j]);
        let m = greedy_match(&w);
        assert_eq!(m.perm, vec![1, 0]);
        assert!((m.min_overlap - 0.8).abs() < 1e-15);
    }
}
