//! Critical kick strength `ε_max`: the first `ε` at which the Floquet state
//! continuously connected to `|E_k⟩` has `F_max < 1/2`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{FloquetSetup, FloquetSolution};
use crate::lmg::{h0_spectrum, kick_spectrum, ModelParams};
use crate::resonance::{Condition, StateSelection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Points of the geometric coarse scan.
    pub n_geometric: usize,
    /// Scan starts at `lo_factor / J²`.
    pub lo_factor: f64,
    /// Scan ends at `ceiling_factor / J` unless `ceiling` is set.
    pub ceiling_factor: f64,
    pub ceiling: Option<f64>,
    /// Interior points of the linear refinement inside the first bracket.
    pub n_linear: usize,
    pub f_tol: f64,
    pub width_rel_tol: f64,
    pub overlap_min: f64,
    /// Substeps inserted once when the overlap falls below `overlap_min`.
    pub refine_substeps: usize,
    /// First `ε` for exactly resonant pairs, where `ε = 0` is degenerate.
    pub er_seed_eps: f64,
    pub max_root_steps: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n_geometric: 64,
            lo_factor: 1e-8,
            ceiling_factor: 10.0,
            ceiling: None,
            n_linear: 8,
            f_tol: 1e-4,
            width_rel_tol: 1e-12,
            overlap_min: 0.5,
            refine_substeps: 8,
            er_seed_eps: 1e-12,
            max_root_steps: 200,
        }
    }
}

impl ScanConfig {
    pub fn grid(&self, j: f64) -> Vec<f64> {
        let lo = self.lo_factor / (j * j);
        let hi = self.ceiling.unwrap_or(self.ceiling_factor / j);
        if hi <= 0.0 {
            return Vec::new();
        }
        if hi <= lo || self.n_geometric < 2 {
            return vec![hi];
        }
        let r = (hi / lo).ln() / (self.n_geometric - 1) as f64;
        (0..self.n_geometric).map(|i| lo * (r * i as f64).exp()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpsMaxStatus {
    Crossed,
    NoCrossing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsMaxResult {
    pub j: f64,
    pub k: usize,
    pub condition: Condition,
    pub status: EpsMaxStatus,
    pub eps_max: Option<f64>,
    /// `F_max` of the tracked branch at `eps_max`.
    pub f_at: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub n_floquet_solves: usize,
}

/// Tracked point on the branch.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub epsilon: f64,
    pub column: usize,
    pub overlap: f64,
    pub fmax: f64,
    pub state: Vec<f64>,
}

/// Follows the branch from `prev` to `eps`, refining once with substeps if
/// the overlap is too small.
pub fn track_to(setup: &FloquetSetup, prev: &BranchPoint, eps: f64, cfg: &ScanConfig) -> Result<BranchPoint> {
    let sol = setup.solve(eps, false)?;
    let pt = branch_point(&sol, &prev.state);
    if pt.overlap >= cfg.overlap_min {
        return Ok(pt);
    }
    let mut cur = prev.clone();
    for s in 1..=cfg.refine_substeps {
        let e = prev.epsilon + (eps - prev.epsilon) * s as f64 / cfg.refine_substeps as f64;
        let sol = setup.solve(e, false)?;
        let next = branch_point(&sol, &cur.state);
        if next.overlap < cfg.overlap_min {
            return Err(Error::TrackingFailure { eps: e, overlap: next.overlap });
        }
        cur = next;
    }
    Ok(cur)
}

fn branch_point(sol: &FloquetSolution, prev: &[f64]) -> BranchPoint {
    let (column, overlap) = sol.best_match(prev);
    let (_, fmax) = sol.fmax(column);
    let mut state = sol.column(column);
    let dot: f64 = state.iter().zip(prev).map(|(a, b)| a * b).sum();
    if dot < 0.0 {
        state.iter_mut().for_each(|x| *x = -*x);
    }
    BranchPoint { epsilon: sol.epsilon, column, overlap, fmax, state }
}

/// Starting point of the branch of level `k`.
pub fn seed_branch(setup: &FloquetSetup, k: usize, condition: Condition, cfg: &ScanConfig) -> Result<BranchPoint> {
    let n = setup.dim();
    if k >= n {
        return Err(Error::OutOfRange { index: k as i64, dim: n });
    }
    match condition {
        Condition::ER => {
            let sol = setup.solve(cfg.er_seed_eps, false)?;
            let column = sol.column_for_level(k);
            let (_, fmax) = sol.fmax(column);
            Ok(BranchPoint { epsilon: cfg.er_seed_eps, column, overlap: 1.0, fmax, state: sol.column(column) })
        }
        _ => {
            let mut state = vec![0.0; n];
            state[k] = 1.0;
            Ok(BranchPoint { epsilon: 0.0, column: k, overlap: 1.0, fmax: 1.0, state })
        }
    }
}

/// `F_max` along an ascending `ε` grid on the tracked branch of level `k`.
pub fn fmax_curve(
    setup: &FloquetSetup,
    k: usize,
    condition: Condition,
    eps: &[f64],
    cfg: &ScanConfig,
) -> Result<Vec<BranchPoint>> {
    let mut cur = seed_branch(setup, k, condition, cfg)?;
    let mut out = Vec::with_capacity(eps.len());
    for &e in eps {
        if e <= cur.epsilon {
            continue;
        }
        cur = track_to(setup, &cur, e, cfg)?;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Critical kick strength for a selected state.
pub fn epsilon_max(selection: &StateSelection, params: &ModelParams, cfg: &ScanConfig) -> Result<EpsMaxResult> {
    let p = params.with_tau(selection.tau_used);
    let h0 = Arc::new(h0_spectrum(&p)?);
    let kick = kick_spectrum(p.rep()?)?;
    let setup = FloquetSetup::new(h0, &kick, p.tau)?;
    epsilon_max_with(&setup, selection.k, selection.condition, cfg)
}

/// Same as [`epsilon_max`] with a prebuilt setup.
pub fn epsilon_max_with(setup: &FloquetSetup, k: usize, condition: Condition, cfg: &ScanConfig) -> Result<EpsMaxResult> {
    let start = setup.solve_count();
    let j = setup.h0.j();
    let done = |status, eps_max, f_at, bracket| EpsMaxResult {
        j,
        k,
        condition,
        status,
        eps_max,
        f_at,
        bracket,
        n_floquet_solves: setup.solve_count() - start,
    };
    let grid = cfg.grid(j);
    if grid.is_empty() {
        return Ok(done(EpsMaxStatus::NoCrossing, None, None, None));
    }
    let mut cur = seed_branch(setup, k, condition, cfg)?;
    let mut bracket = None;
    let start_eps = cur.epsilon;
    for &e in grid.iter().filter(|&&e| e > start_eps) {
        let next = track_to(setup, &cur, e, cfg)?;
        if next.fmax < 0.5 {
            bracket = Some((cur, next));
            break;
        }
        cur = next;
    }
    let Some((mut a, mut b)) = bracket else {
        return Ok(done(EpsMaxStatus::NoCrossing, None, None, None));
    };

    // Linear refinement of the coarse bracket.
    let (lo, hi) = (a.epsilon, b.epsilon);
    for s in 1..=cfg.n_linear {
        let e = lo + (hi - lo) * s as f64 / (cfg.n_linear + 1) as f64;
        let next = track_to(setup, &a, e, cfg)?;
        if next.fmax < 0.5 {
            b = next;
            break;
        }
        a = next;
    }

    // Illinois regula falsi on F − 1/2, tracking from the lower end.
    let (mut ga, mut gb) = (a.fmax - 0.5, b.fmax - 0.5);
    let mut side = 0i8;
    for _ in 0..cfg.max_root_steps {
        let width = b.epsilon - a.epsilon;
        if width < cfg.width_rel_tol * b.epsilon {
            let pick = if ga.abs() <= gb.abs() { &a } else { &b };
            return Ok(done(EpsMaxStatus::Crossed, Some(pick.epsilon), Some(pick.fmax), Some((a.epsilon, b.epsilon))));
        }
        let mut e = a.epsilon - ga * width / (gb - ga);
        let guard = 0.01 * width;
        if !(e.is_finite()) {
            e = a.epsilon + 0.5 * width;
        }
        e = e.clamp(a.epsilon + guard, b.epsilon - guard);
        let m = track_to(setup, &a, e, cfg)?;
        let gm = m.fmax - 0.5;
        if gm.abs() < cfg.f_tol {
            return Ok(done(EpsMaxStatus::Crossed, Some(m.epsilon), Some(m.fmax), Some((a.epsilon, b.epsilon))));
        }
        if gm >= 0.0 {
            a = m;
            ga = gm;
            if side == 1 {
                gb *= 0.5;
            }
            side = 1;
        } else {
            b = m;
            gb = gm;
            if side == -1 {
                ga *= 0.5;
            }
            side = -1;
        }
    }
    Err(Error::Invalid(format!("root search for eps_max did not converge in {} steps", cfg.max_root_steps)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spans_the_scan_range() {
        let g = ScanConfig::default().grid(100.0);
        assert_eq!(g.len(), 64);
        assert!((g[0] - 1e-12).abs() < 1e-24);
        assert!((g[63] - 0.1).abs() < 1e-12);
        let none = ScanConfig { ceiling: Some(0.0), ..Default::default() }.grid(100.0);
        assert!(none.is_empty());
    }
}
