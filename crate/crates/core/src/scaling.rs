//! Scaling experiments over `J` grids, power-law fits and curve collapse.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::classical::{classical_period, Couplings};
use crate::epsmax::{epsilon_max_with, EpsMaxResult, ScanConfig};
use crate::error::{Error, Result};
use crate::floquet::FloquetSetup;
use crate::lmg::{h0_spectrum, kick_spectrum, ModelParams, Spectrum};
use crate::resonance::{find_cr_state, find_nr_state, tune_tau_er, Condition, ResonanceLabel, StateSelection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

impl PowerLawFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.prefactor * x.powf(self.exponent)
    }
}

/// Least squares on `(ln x, ln y)`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::FitPoints { need: 3, got: points.len() });
    }
    for &(x, y) in points {
        if !(x > 0.0) {
            return Err(Error::NonPositive(x));
        }
        if !(y > 0.0) {
            return Err(Error::NonPositive(y));
        }
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("power-law fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(PowerLawFit { exponent: slope, prefactor: (my - slope * mx).exp(), r_squared, n_points: points.len() })
}

/// Prefactor of `y = c·x^p` with the exponent held fixed (geometric mean of `y/x^p`).
pub fn fixed_exponent_prefactor(points: &[(f64, f64)], p: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::FitPoints { need: 1, got: 0 });
    }
    let mut s = 0.0;
    for &(x, y) in points {
        if !(x > 0.0 && y > 0.0) {
            return Err(Error::NonPositive(if x > 0.0 { y } else { x }));
        }
        s += y.ln() - p * x.ln();
    }
    Ok((s / points.len() as f64).exp())
}

/// `n` log-spaced values in `[lo, hi]`, rounded to integers (a `J` grid).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    geom_space(lo, hi, n).into_iter().map(f64::round).collect()
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn geom_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// What a scaling run selects at each `J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", deny_unknown_fields)]
pub enum ScalingTarget {
    /// Non-resonant level at the given `E/J`.
    #[serde(rename = "NR")]
    Nr { energy_over_j: f64 },
    #[serde(rename = "CR")]
    Cr { label: ResonanceLabel },
    #[serde(rename = "ER")]
    Er { label: ResonanceLabel },
}

impl ScalingTarget {
    pub fn condition(&self) -> Condition {
        match self {
            ScalingTarget::Nr { .. } => Condition::NR,
            ScalingTarget::Cr { .. } => Condition::CR,
            ScalingTarget::Er { .. } => Condition::ER,
        }
    }

    pub fn label(&self) -> Option<ResonanceLabel> {
        match *self {
            ScalingTarget::Nr { .. } => None,
            ScalingTarget::Cr { label } | ScalingTarget::Er { label } => Some(label),
        }
    }

    /// State selection on a precomputed spectrum.
    pub fn select(&self, spec: &Spectrum, params: &ModelParams) -> Result<StateSelection> {
        match *self {
            ScalingTarget::Nr { energy_over_j } => {
                let g = Couplings::new(params.gamma_x, params.gamma_y);
                find_nr_state(spec, energy_over_j, params.tau, |e| classical_period(e, g))
            }
            ScalingTarget::Cr { label } => find_cr_state(spec, label, params.tau),
            ScalingTarget::Er { label } => tune_tau_er(spec, label, params.tau),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub j: f64,
    pub selection: Option<StateSelection>,
    pub result: Option<EpsMaxResult>,
    /// Why the point is excluded from the fit, if it is.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRun {
    pub target: ScalingTarget,
    pub j_grid: Vec<f64>,
    pub points: Vec<ScalingPoint>,
    pub fit: Option<PowerLawFit>,
    pub budget_exhausted: bool,
    pub n_floquet_solves: usize,
}

impl ScalingRun {
    /// `(J, ε_max)` of the successful points.
    pub fn successes(&self) -> Vec<(f64, f64)> {
        self.points.iter().filter_map(|p| p.result.as_ref().and_then(|r| r.eps_max.map(|e| (p.j, e)))).collect()
    }

    pub fn excluded(&self) -> Vec<(f64, String)> {
        self.points.iter().filter_map(|p| p.failure.clone().map(|f| (p.j, f))).collect()
    }
}

/// One `J` of a scaling run, with its own budget check.
pub fn scaling_point(
    target: ScalingTarget,
    j: f64,
    params: &ModelParams,
    cfg: &ScanConfig,
) -> Result<(StateSelection, EpsMaxResult)> {
    let p = params.with_j(j);
    let spec = h0_spectrum(&p)?;
    let sel = target.select(&spec, &p)?;
    let kick = kick_spectrum(p.rep()?)?;
    let setup = FloquetSetup::new(Arc::new(spec), &kick, sel.tau_used)?;
    let res = epsilon_max_with(&setup, sel.k, sel.condition, cfg)?;
    Ok((sel, res))
}

/// Runs `ε_max` over a grid of `J` on `workers` threads. Jobs start only
/// while the solve budget lasts; later points are flagged and excluded.
pub fn run_scaling(
    target: ScalingTarget,
    j_grid: &[f64],
    params: &ModelParams,
    cfg: &ScanConfig,
    budget: usize,
    workers: usize,
) -> Result<ScalingRun> {
    if j_grid.len() < 5 {
        return Err(Error::FitPoints { need: 5, got: j_grid.len() });
    }
    if j_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("J grid must be strictly ascending".into()));
    }
    let used = AtomicUsize::new(0);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<ScalingPoint>>> = Mutex::new(vec![None; j_grid.len()]);
    let exhausted = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers.max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= j_grid.len() {
                    break;
                }
                let j = j_grid[i];
                let point = if used.load(Ordering::SeqCst) >= budget {
                    exhausted.store(1, Ordering::SeqCst);
                    ScalingPoint { j, selection: None, result: None, failure: Some(Error::BudgetExhausted(budget).to_string()) }
                } else {
                    match scaling_point(target, j, params, cfg) {
                        Ok((sel, res)) => {
                            used.fetch_add(res.n_floquet_solves, Ordering::SeqCst);
                            let failure = res.eps_max.is_none().then(|| "no crossing below the scan ceiling".to_string());
                            ScalingPoint { j, selection: Some(sel), result: Some(res), failure }
                        }
                        Err(e) => {
                            log::warn!("J = {j}: {e}");
                            ScalingPoint { j, selection: None, result: None, failure: Some(format!("{}: {e}", e.module())) }
                        }
                    }
                };
                slots.lock().unwrap()[i] = Some(point);
            });
        }
    });
    let points: Vec<ScalingPoint> = slots.into_inner().unwrap().into_iter().map(|p| p.expect("every job reports")).collect();
    let mut run = ScalingRun {
        target,
        j_grid: j_grid.to_vec(),
        points,
        fit: None,
        budget_exhausted: exhausted.load(Ordering::SeqCst) == 1,
        n_floquet_solves: used.load(Ordering::SeqCst),
    };
    let ok = run.successes();
    run.fit = if ok.len() >= 3 { Some(fit_power_law(&ok)?) } else { None };
    Ok(run)
}

/// `F_max(ε)` samples of one `J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmaxCurve {
    pub j: f64,
    pub points: Vec<(f64, f64)>,
}

/// Maximum pairwise deviation of `F_max` curves against `z = ε·J^power`,
/// over the log-spaced common `z` range where every curve has `F ≥ 0.45`.
pub fn collapse_check(curves: &[FmaxCurve], power: f64) -> Result<f64> {
    if curves.len() < 3 {
        return Err(Error::FitPoints { need: 3, got: curves.len() });
    }
    let scaled: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| {
            let s = c.j.powf(power);
            let mut v: Vec<(f64, f64)> = c.points.iter().filter(|p| p.0 > 0.0).map(|&(e, f)| ((e * s).ln(), f)).collect();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            v
        })
        .collect();
    if scaled.iter().any(|v| v.len() < 2) {
        return Err(Error::InsufficientOverlap);
    }
    let lo = scaled.iter().map(|v| v[0].0).fold(f64::NEG_INFINITY, f64::max);
    let hi = scaled.iter().map(|v| v[v.len() - 1].0).fold(f64::INFINITY, f64::min);
    if hi <= lo {
        return Err(Error::InsufficientOverlap);
    }
    let n = 400;
    let mut worst: Option<f64> = None;
    for i in 0..=n {
        let x = lo + (hi - lo) * i as f64 / n as f64;
        let vals: Vec<f64> = scaled.iter().map(|v| interp(v, x)).collect();
        if vals.iter().any(|&f| f < 0.45) {
            continue;
        }
        let spread = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vals.iter().cloned().fold(f64::INFINITY, f64::min);
        worst = Some(worst.map_or(spread, |w: f64| w.max(spread)));
    }
    worst.ok_or(Error::InsufficientOverlap)
}

fn interp(v: &[(f64, f64)], x: f64) -> f64 {
    let i = v.partition_point(|p| p.0 < x);
    if i == 0 {
        return v[0].1;
    }
    if i >= v.len() {
        return v[v.len() - 1].1;
    }
    let (a, b) = (v[i - 1], v[i]);
    a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
}

/// Largest subset of `(J, r)` with one sign of `r`, `|r|` strictly
/// decreasing in `J` and `|r|·J` within a factor `spread` across the subset.
pub fn monotone_mismatch_subset(series: &[(f64, f64)], positive: bool, spread: f64) -> Vec<f64> {
    let mut pts: Vec<(f64, f64)> =
        series.iter().cloned().filter(|p| if positive { p.1 > 0.0 } else { p.1 < 0.0 }).map(|(j, r)| (j, r.abs())).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Vec<f64> = Vec::new();
    for anchor in &pts {
        let base = anchor.1 * anchor.0;
        let cand: Vec<(f64, f64)> = pts.iter().cloned().filter(|p| p.1 * p.0 >= base && p.1 * p.0 <= base * spread).collect();
        // Longest strictly decreasing subsequence in |r|.
        let n = cand.len();
        let mut len = vec![1usize; n];
        let mut prev = vec![usize::MAX; n];
        for i in 0..n {
            for k in 0..i {
                if cand[k].1 > cand[i].1 && len[k] + 1 > len[i] {
                    len[i] = len[k] + 1;
                    prev[i] = k;
                }
            }
        }
        if let Some(end) = (0..n).max_by_key(|&i| (len[i], std::cmp::Reverse(i))) {
            if len[end] > best.len() {
                let mut chain = Vec::new();
                let mut i = end;
                while i != usize::MAX {
                    chain.push(cand[i].0);
                    i = prev[i];
                }
                chain.reverse();
                best = chain;
            }
        }
    }
    best
}

/// `J` above which the quartic resonant term dominates the quadratic
/// non-resonant one: `√(a_NR/(tol·a_CR))`.
pub fn dominance_threshold(a2_nr: f64, a2_cr: f64, tolerance: f64) -> Result<f64> {
    if !(a2_nr > 0.0) {
        return Err(Error::NonPositive(a2_nr));
    }
    if !(a2_cr > 0.0) {
        return Err(Error::NonPositive(a2_cr));
    }
    Ok((a2_nr / (tolerance * a2_cr)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let pts: Vec<(f64, f64)> = [10.0f64, 20.0, 50.0, 100.0].iter().map(|&j| (j, 3.0 * j.powf(-2.0))).collect();
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-12);
        assert!((fit.prefactor - 3.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominance_with_unit_tolerance() {
        assert_eq!(dominance_threshold(2.0, 2.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn subset_is_monotone() {
        let s = [(100.0, 0.01), (120.0, -0.004), (150.0, 0.0066), (200.0, 0.0049), (300.0, 0.0001)];
        assert_eq!(monotone_mismatch_subset(&s, true, 1.2), vec![100.0, 150.0, 200.0]);
    }
}
