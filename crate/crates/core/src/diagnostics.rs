//! Localization measures and phase-space pictures of states.

use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmg::Spectrum;
use crate::spin::AngularMomentumRep;

const NORM_TOL: f64 = 1e-8;

fn check_norm(state: &[c64]) -> Result<()> {
    let n2: f64 = state.iter().map(|c| c.norm_sqr()).sum();
    let dev = (n2.sqrt() - 1.0).abs();
    if dev > NORM_TOL {
        return Err(Error::Unnormalized(dev));
    }
    Ok(())
}

/// `|⟨E_n|ψ⟩|²` for a Dicke-basis state.
pub fn h0_weights(state: &[c64], spec: &Spectrum) -> Result<Vec<f64>> {
    if state.len() != spec.dim() {
        return Err(Error::DimensionMismatch(state.len(), spec.dim()));
    }
    check_norm(state)?;
    let re: Vec<f64> = state.iter().map(|c| c.re).collect();
    let im: Vec<f64> = state.iter().map(|c| c.im).collect();
    let a = crate::linalg::at_x(&spec.vectors, &re);
    let b = crate::linalg::at_x(&spec.vectors, &im);
    Ok(a.iter().zip(&b).map(|(x, y)| x * x + y * y).collect())
}

/// `1/Σ|⟨E_n|ψ⟩|⁴`.
pub fn participation_ratio(state: &[c64], spec: &Spectrum) -> Result<f64> {
    let w = h0_weights(state, spec)?;
    Ok(1.0 / w.iter().map(|x| x * x).sum::<f64>())
}

/// `(n*, max_n |⟨E_n|ψ⟩|²)`, ties toward smaller `n`.
pub fn max_fidelity(state: &[c64], spec: &Spectrum) -> Result<(usize, f64)> {
    let w = h0_weights(state, spec)?;
    let mut best = (0usize, -1.0f64);
    for (n, &x) in w.iter().enumerate() {
        if x > best.1 {
            best = (n, x);
        }
    }
    Ok(best)
}

/// Logarithms of the binomial coefficients `C(2J, n)`.
fn ln_binomials(two_j: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(two_j + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for n in 0..two_j {
        acc += ((two_j - n) as f64).ln() - ((n + 1) as f64).ln();
        out.push(acc);
    }
    out
}

/// Spin coherent state centred at `(Q, P)`, in the Dicke basis
/// `|J, m⟩`, `m = −J..J`.
///
/// With `α = (Q − iP)/√(4 − Q² − P²)` the weights are binomial in
/// `p = (Q² + P²)/4` and the phase of component `n = J + m` is `n·arg α`.
/// The boundary circle maps to `|J, J⟩`.
pub fn coherent_state(rep: AngularMomentumRep, q: f64, p: f64) -> Result<Vec<c64>> {
    let r2 = q * q + p * p;
    if !(r2.is_finite()) || r2 > 4.0 + 1e-12 {
        return Err(Error::OutsideDisk { q, p });
    }
    let dim = rep.dim();
    let two_j = dim - 1;
    let mut out = vec![c64::new(0.0, 0.0); dim];
    let pr = (r2 / 4.0).min(1.0);
    if pr >= 1.0 {
        out[two_j] = c64::new(1.0, 0.0);
        return Ok(out);
    }
    if pr == 0.0 {
        out[0] = c64::new(1.0, 0.0);
        return Ok(out);
    }
    let theta = (-p).atan2(q);
    let lnc = ln_binomials(two_j);
    let (lp, lq) = (pr.ln(), (-pr).ln_1p());
    for n in 0..dim {
        let lw = lnc[n] + n as f64 * lp + (two_j - n) as f64 * lq;
        out[n] = c64::cis(n as f64 * theta) * (0.5 * lw).exp();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_q: usize,
    pub n_p: usize,
    pub q_range: (f64, f64),
    pub p_range: (f64, f64),
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_q: 256, n_p: 256, q_range: (-2.0, 2.0), p_range: (-2.0, 2.0) }
    }
}

impl GridSpec {
    pub fn q(&self, i: usize) -> f64 {
        node(self.q_range, self.n_q, i)
    }

    pub fn p(&self, i: usize) -> f64 {
        node(self.p_range, self.n_p, i)
    }
}

fn node((a, b): (f64, f64), n: usize, i: usize) -> f64 {
    if n <= 1 {
        return 0.5 * (a + b);
    }
    a + (b - a) * i as f64 / (n - 1) as f64
}

/// Husimi values on a `(Q, P)` grid; `None` outside the disk.
#[derive(Debug, Clone)]
pub struct HusimiGrid {
    pub grid: GridSpec,
    /// Row-major, `values[iq * n_p + ip]`.
    pub values: Vec<Option<f64>>,
}

impl HusimiGrid {
    pub fn at(&self, iq: usize, ip: usize) -> Option<f64> {
        self.values[iq * self.grid.n_p + ip]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().cloned().fold(0.0, f64::max)
    }

    /// Share of the grid sum carried by nodes that satisfy `pred`.
    pub fn fraction_where<F: Fn(f64, f64) -> bool>(&self, pred: F) -> f64 {
        let (mut inside, mut total) = (0.0, 0.0);
        for iq in 0..self.grid.n_q {
            for ip in 0..self.grid.n_p {
                if let Some(v) = self.at(iq, ip) {
                    total += v;
                    if pred(self.grid.q(iq), self.grid.p(ip)) {
                        inside += v;
                    }
                }
            }
        }
        inside / total
    }
}

/// `|⟨α|ψ⟩|²` at one phase-space point. Only binomial weights within
/// `13σ + 10` of the mode are summed; the rest are below `e⁻⁸⁰`.
pub fn husimi_at(state: &[c64], q: f64, p: f64, lnc: &[f64]) -> Option<f64> {
    let r2 = q * q + p * p;
    if r2 > 4.0 {
        return None;
    }
    let two_j = state.len() - 1;
    let pr = r2 / 4.0;
    if pr >= 1.0 {
        return Some(state[two_j].norm_sqr());
    }
    if pr == 0.0 {
        return Some(state[0].norm_sqr());
    }
    let sigma = (two_j as f64 * pr * (1.0 - pr)).sqrt();
    let mode = two_j as f64 * pr;
    let w = 13.0 * sigma + 10.0;
    let lo = (mode - w).floor().max(0.0) as usize;
    let hi = ((mode + w).ceil() as usize).min(two_j);
    let theta = (-p).atan2(q);
    let (lp, lq) = (pr.ln(), (-pr).ln_1p());
    let step = c64::cis(-theta);
    let mut ph = c64::cis(-(lo as f64) * theta);
    let mut acc = c64::new(0.0, 0.0);
    for n in lo..=hi {
        let lw = lnc[n] + n as f64 * lp + (two_j - n) as f64 * lq;
        acc += ph * state[n] * (0.5 * lw).exp();
        ph *= step;
    }
    Some(acc.norm_sqr())
}

/// Husimi function `Q(Q, P) = |⟨α(Q,P)|ψ⟩|²` of a Dicke-basis state.
pub fn husimi(state: &[c64], grid: &GridSpec) -> Result<HusimiGrid> {
    husimi_parallel(state, grid, 1)
}

/// [`husimi`] with the `Q` rows split over `workers` threads.
pub fn husimi_parallel(state: &[c64], grid: &GridSpec, workers: usize) -> Result<HusimiGrid> {
    if state.is_empty() {
        return Err(Error::DimensionMismatch(0, 1));
    }
    check_norm(state)?;
    if grid.n_q == 0 || grid.n_p == 0 {
        return Err(Error::Invalid("empty Husimi grid".into()));
    }
    let lnc = ln_binomials(state.len() - 1);
    let mut values = vec![None; grid.n_q * grid.n_p];
    let rows_per = grid.n_q.div_ceil(workers.max(1));
    std::thread::scope(|s| {
        for (c, chunk) in values.chunks_mut(rows_per * grid.n_p).enumerate() {
            let lnc = &lnc;
            s.spawn(move || {
                for (i, v) in chunk.iter_mut().enumerate() {
                    let iq = c * rows_per + i / grid.n_p;
                    *v = husimi_at(state, grid.q(iq), grid.p(i % grid.n_p), lnc);
                }
            });
        }
    });
    Ok(HusimiGrid { grid: *grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_state_is_normalized() {
        let rep = AngularMomentumRep::new(20.0).unwrap();
        for &(q, p) in &[(0.3, -0.7), (1.9, 0.1), (0.0, 0.0), (2.0, 0.0)] {
            let s = coherent_state(rep, q, p).unwrap();
            let n: f64 = s.iter().map(|c| c.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12, "{q} {p} {n}");
        }
        assert!(coherent_state(rep, 2.0, 1.0).is_err());
    }

    #[test]
    fn husimi_peaks_at_own_centre() {
        let rep = AngularMomentumRep::new(30.0).unwrap();
        let s = coherent_state(rep, 0.8, 0.5).unwrap();
        let lnc = ln_binomials(60);
        let v = husimi_at(&s, 0.8, 0.5, &lnc).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!(husimi_at(&s, -0.8, 0.5, &lnc).unwrap() < 1e-6);
    }
}
