//! Quantum periods, resonance conditions and state selection.
//!
//! An `m:n` resonance means `m` kicks last as long as `n` unperturbed periods;
//! on the quantum side it couples `E_k` to `E_{k+m}` when `τ(E_{k+m} − E_k) = 2πn`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmg::Spectrum;
use crate::scaling::fit_power_law;

/// Serialized as the string `"m:n"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ResonanceLabel {
    pub m: u32,
    pub n: u32,
}

impl ResonanceLabel {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidParams(format!("resonance {m}:{n} needs m, n >= 1")));
        }
        Ok(Self { m, n })
    }

    /// The gcd-reduced pair.
    pub fn reduced(&self) -> Self {
        let g = gcd(self.m, self.n);
        Self { m: self.m / g, n: self.n / g }
    }

    /// Classical period `m·τ/n` at which the resonance sits.
    pub fn classical_period(&self, tau: f64) -> f64 {
        self.m as f64 * tau / self.n as f64
    }
}

impl fmt::Display for ResonanceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.m, self.n)
    }
}

impl std::str::FromStr for ResonanceLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once(':').ok_or_else(|| Error::InvalidParams(format!("bad label {s}")))?;
        let m = a.trim().parse().map_err(|_| Error::InvalidParams(format!("bad label {s}")))?;
        let n = b.trim().parse().map_err(|_| Error::InvalidParams(format!("bad label {s}")))?;
        Self::new(m, n)
    }
}

impl TryFrom<String> for ResonanceLabel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ResonanceLabel> for String {
    fn from(l: ResonanceLabel) -> String {
        l.to_string()
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    NR,
    CR,
    ER,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::NR => "NR",
            Condition::CR => "CR",
            Condition::ER => "ER",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSelection {
    pub j: f64,
    pub k: usize,
    pub label: Option<ResonanceLabel>,
    pub condition: Condition,
    pub tau_used: f64,
    /// `τ(E_{k+m} − E_k)/(2πn) − 1` for CR/ER, `|τ/T_{k,1} − f|` for NR.
    pub mismatch: f64,
    pub energy_over_j: f64,
}

/// `T_{k,m} = 2π/(E_{k+m} − E_k)`.
pub fn quantum_period(spec: &Spectrum, k: usize, m: usize) -> Result<f64> {
    period_from(&spec.energies, k, m)
}

fn period_from(e: &[f64], k: usize, m: usize) -> Result<f64> {
    if k + m >= e.len() {
        return Err(Error::OutOfRange { index: (k + m) as i64, dim: e.len() });
    }
    let gap = e[k + m] - e[k];
    if gap <= 0.0 {
        return Err(Error::ZeroGap(k, k + m));
    }
    Ok(TAU / gap)
}

fn cr_mismatch(e: &[f64], k: usize, label: ResonanceLabel, tau: f64) -> f64 {
    let m = label.m as usize;
    tau * (e[k + m] - e[k]) / (TAU * label.n as f64) - 1.0
}

/// Close-to-resonance level: `argmin_k |τ(E_{k+m} − E_k)/(2πn) − 1|`.
pub fn find_cr_state(spec: &Spectrum, label: ResonanceLabel, tau: f64) -> Result<StateSelection> {
    find_cr_in(&spec.energies, spec.j(), label, tau)
}

pub fn find_cr_in(e: &[f64], j: f64, label: ResonanceLabel, tau: f64) -> Result<StateSelection> {
    let m = label.m as usize;
    if e.len() <= m {
        return Err(Error::ResonanceOutOfRange { m: label.m, n: label.n });
    }
    let target = TAU * label.n as f64 / tau;
    let gaps: Vec<f64> = (0..e.len() - m).map(|k| e[k + m] - e[k]).collect();
    let lo = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if target < lo || target > hi {
        return Err(Error::ResonanceOutOfRange { m: label.m, n: label.n });
    }
    let mut best = (0usize, f64::INFINITY);
    for k in 0..gaps.len() {
        let r = cr_mismatch(e, k, label, tau);
        if r.abs() < best.1.abs() {
            best = (k, r);
        }
    }
    let k = best.0;
    Ok(StateSelection {
        j,
        k,
        label: Some(label),
        condition: Condition::CR,
        tau_used: tau,
        mismatch: best.1,
        energy_over_j: e[k] / j,
    })
}

/// Every local minimum of `|r_k|` along the spectrum.
pub fn cr_local_minima(spec: &Spectrum, label: ResonanceLabel, tau: f64) -> Vec<(usize, f64)> {
    let e = &spec.energies;
    let m = label.m as usize;
    if e.len() <= m {
        return Vec::new();
    }
    let r: Vec<f64> = (0..e.len() - m).map(|k| cr_mismatch(e, k, label, tau)).collect();
    (0..r.len())
        .filter(|&k| {
            let left = k == 0 || r[k].abs() < r[k - 1].abs();
            let right = k + 1 == r.len() || r[k].abs() <= r[k + 1].abs();
            left && right
        })
        .map(|k| (k, r[k]))
        .collect()
}

/// Exact resonance: keep the CR pair and set `τ = 2πn/(E_{k+m} − E_k)`.
pub fn tune_tau_er(spec: &Spectrum, label: ResonanceLabel, tau_seed: f64) -> Result<StateSelection> {
    let cr = find_cr_state(spec, label, tau_seed)?;
    let e = &spec.energies;
    let m = label.m as usize;
    let gap = e[cr.k + m] - e[cr.k];
    if gap <= 0.0 {
        return Err(Error::ZeroGap(cr.k, cr.k + m));
    }
    let tau = TAU * label.n as f64 / gap;
    if ((tau - tau_seed) / tau_seed).abs() >= 0.05 {
        return Err(Error::TauDrift { tuned: tau, seed: tau_seed });
    }
    Ok(StateSelection {
        condition: Condition::ER,
        tau_used: tau,
        mismatch: cr_mismatch(e, cr.k, label, tau),
        ..cr
    })
}

/// Non-resonant level: `f = τ/T(E/J)` from the classical period, then
/// `argmin_k |τ/T_{k,1} − f|` with ties toward lower `k`.
pub fn find_nr_state<F>(spec: &Spectrum, energy_over_j: f64, tau: f64, period: F) -> Result<StateSelection>
where
    F: Fn(f64) -> Result<f64>,
{
    find_nr_in(&spec.energies, spec.j(), energy_over_j, tau, period)
}

pub fn find_nr_in<F>(e: &[f64], j: f64, energy_over_j: f64, tau: f64, period: F) -> Result<StateSelection>
where
    F: Fn(f64) -> Result<f64>,
{
    let f = tau / period(energy_over_j)?;
    let mut best = (0usize, f64::INFINITY);
    for k in 0..e.len().saturating_sub(1) {
        let ratio = tau / period_from(e, k, 1)?;
        let d = (ratio - f).abs();
        if d < best.1 {
            best = (k, d);
        }
    }
    let k = best.0;
    Ok(StateSelection {
        j,
        k,
        label: None,
        condition: Condition::NR,
        tau_used: tau,
        mismatch: best.1,
        energy_over_j: e[k] / j,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeltaEstimate {
    /// `δ_{m:n}`: the mismatch phase `|τΔE/2 − nπ|` times `J`, from the envelope.
    pub delta: f64,
    /// Exponent of the envelope of `|r|` against `J`; absent for an all-zero series.
    pub exponent: Option<f64>,
    pub r_squared: Option<f64>,
    /// `(J, envelope of |r|)` per window.
    pub envelope: Vec<(f64, f64)>,
}

/// Envelope of the oscillating mismatch series: 90th percentile over
/// sliding windows of consecutive `J` values.
pub fn extract_delta(series: &[StateSelection], label: ResonanceLabel) -> Result<DeltaEstimate> {
    if series.len() < 5 {
        return Err(Error::FitPoints { need: 5, got: series.len() });
    }
    let mut pts: Vec<(f64, f64)> = series.iter().map(|s| (s.j, s.mismatch.abs())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scale = PI * label.n as f64;
    if pts.iter().all(|p| p.1 == 0.0) {
        return Ok(DeltaEstimate { delta: 0.0, exponent: None, r_squared: None, envelope: Vec::new() });
    }
    let w = (pts.len() / 8).max(5).min(pts.len());
    let mut envelope = Vec::new();
    let mut deltas = Vec::new();
    let mut start = 0;
    while start + w <= pts.len() {
        let win = &pts[start..start + w];
        let q = quantile(win.iter().map(|p| p.1).collect(), 0.9);
        let jc = (win.iter().map(|p| p.0.ln()).sum::<f64>() / w as f64).exp();
        envelope.push((jc, q));
        deltas.push(quantile(win.iter().map(|p| p.1 * scale * p.0).collect(), 0.9));
        start += w;
    }
    let delta = quantile(deltas, 0.5);
    let usable: Vec<(f64, f64)> = envelope.iter().cloned().filter(|p| p.1 > 0.0).collect();
    let (exponent, r_squared) = if usable.len() >= 3 {
        let fit = fit_power_law(&usable)?;
        if fit.exponent > -0.5 {
            return Err(Error::NonDecaying(fit.exponent));
        }
        (Some(fit.exponent), Some(fit.r_squared))
    } else {
        (None, None)
    };
    Ok(DeltaEstimate { delta, exponent, r_squared, envelope })
}

/// Linear-interpolated quantile.
pub fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_reduce_and_parse() {
        let l: ResonanceLabel = "4:6".parse().unwrap();
        assert_eq!(l.reduced(), ResonanceLabel { m: 2, n: 3 });
        assert!(ResonanceLabel::new(0, 1).is_err());
        assert_eq!(l.to_string(), "4:6");
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(vec![3.0, 1.0, 2.0], 0.5), 2.0);
        assert!((quantile(vec![0.0, 10.0], 0.9) - 9.0).abs() < 1e-12);
    }
}
