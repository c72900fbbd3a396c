//! One pipeline per subcommand. Each returns its files and the manifest
//! details; caching and writing happen in [`crate::run`].

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use qkam_core::classical::{
    classical_period, h0_classical, point_on_contour, resonant_energies, seed_lattice, stroboscopic_map, Couplings,
    MapParams, PhasePoint,
};
use qkam_core::diagnostics::husimi_parallel;
use qkam_core::epsmax::{epsilon_max_with, fmax_curve, EpsMaxResult, ScanConfig};
use qkam_core::floquet::{track_branch, FloquetSetup};
use qkam_core::lmg::{h0_spectrum, kick_spectrum, KickMatrix, ModelParams, Spectrum};
use qkam_core::resonance::{cr_local_minima, find_cr_state, quantum_period, Condition, StateSelection};
use qkam_core::scaling::{collapse_check, run_scaling, FmaxCurve, ScalingTarget};
use qkam_core::upt::{degenerate_block, er_a2, non_degenerate, predict_eps_max, s2_split, EpsMaxCoefficients};
use serde_json::json;

use crate::cache::Outcome;
use crate::config::{AllLevels, JGrid, Levels, RunConfig, StateSource};
use crate::error::CliError;
use crate::export::{fmt_f64, fmt_opt, Artifacts, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Floquet,
    Husimi,
    Poincare,
    Epsmax,
    Scaling,
    Upt,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Floquet => "floquet",
            Command::Husimi => "husimi",
            Command::Poincare => "poincare",
            Command::Epsmax => "epsmax",
            Command::Scaling => "scaling",
            Command::Upt => "upt",
        }
    }

    /// The part of the config that determines the results.
    pub fn cache_inputs(&self, cfg: &RunConfig) -> serde_json::Value {
        let block = match self {
            Command::Spectrum => json!(cfg.spectrum),
            Command::Floquet => json!(cfg.floquet),
            Command::Husimi => json!(cfg.husimi),
            Command::Poincare => json!(cfg.poincare),
            Command::Epsmax => json!(cfg.epsmax),
            Command::Scaling => json!(cfg.scaling),
            Command::Upt => json!(cfg.upt),
        };
        json!({ "model": cfg.model, "block": block })
    }

    pub fn execute(&self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        match self {
            Command::Spectrum => spectrum(cfg),
            Command::Floquet => floquet(cfg),
            Command::Husimi => husimi(cfg),
            Command::Poincare => poincare(cfg),
            Command::Epsmax => epsmax(cfg),
            Command::Scaling => scaling(cfg),
            Command::Upt => upt(cfg),
        }
    }
}

fn couplings(p: &ModelParams) -> Couplings {
    Couplings::new(p.gamma_x, p.gamma_y)
}

fn setup_for(spec: Spectrum, tau: f64) -> Result<FloquetSetup, CliError> {
    let kick = kick_spectrum(spec.rep)?;
    Ok(FloquetSetup::new(Arc::new(spec), &kick, tau)?)
}

pub const SELECTION_HEADER: [&str; 8] = ["J", "condition", "m", "n", "k", "E_k/J", "tau_used", "mismatch"];
pub const EPSMAX_HEADER: [&str; 7] = ["J", "k", "E_k/J", "condition", "eps_max", "F_at_eps_max", "n_solves"];

fn selection_row(s: &StateSelection) -> Vec<String> {
    let (m, n) = s.label.map(|l| (l.m.to_string(), l.n.to_string())).unwrap_or_default();
    vec![
        fmt_f64(s.j),
        s.condition.to_string(),
        m,
        n,
        s.k.to_string(),
        fmt_f64(s.energy_over_j),
        fmt_f64(s.tau_used),
        fmt_f64(s.mismatch),
    ]
}

fn epsmax_row(r: &EpsMaxResult, energy_over_j: f64) -> Vec<String> {
    vec![
        fmt_f64(r.j),
        r.k.to_string(),
        fmt_f64(energy_over_j),
        r.condition.to_string(),
        fmt_opt(r.eps_max),
        fmt_opt(r.f_at),
        r.n_floquet_solves.to_string(),
    ]
}

/// CR selections for every label, skipping labels outside the spectrum.
fn selections(spec: &Spectrum, labels: &[qkam_core::resonance::ResonanceLabel], tau: f64) -> Table {
    let mut t = Table::new(&SELECTION_HEADER);
    for &l in labels {
        match find_cr_state(spec, l, tau) {
            Ok(s) => t.push(selection_row(&s)),
            Err(e) => log::info!("resonance {l}: {e}"),
        }
    }
    t
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.model;
    let spec = h0_spectrum(p)?;
    let j = spec.j();
    let g = couplings(p);
    let mut out = Artifacts::default();

    let mut t = Table::new(&["k", "E_k", "E_k/J"]);
    for (k, &e) in spec.energies.iter().enumerate() {
        t.push(vec![k.to_string(), fmt_f64(e), fmt_f64(e / j)]);
    }
    out.table("spectrum.csv", &t)?;

    let mut t = Table::new(&["k", "Ebar_k/J", "T_k1", "T_classical", "rel_dev"]);
    for k in 0..spec.dim().saturating_sub(1) {
        let ebar = 0.5 * (spec.energies[k] + spec.energies[k + 1]) / j;
        let tq = quantum_period(&spec, k, 1)?;
        let tc = classical_period(ebar, g).ok();
        let dev = tc.map(|tc| (tq - tc).abs() / tc);
        t.push(vec![k.to_string(), fmt_f64(ebar), fmt_f64(tq), fmt_opt(tc), fmt_opt(dev)]);
    }
    out.table("periods.csv", &t)?;

    let mut t = Table::new(&["E_over_J", "T"]);
    let (lo, hi) = (spec.energies[0] / j, spec.energies[spec.dim() - 1] / j);
    let n = cfg.spectrum.curve_points;
    for i in 0..n {
        let e = lo + (hi - lo) * (i as f64 + 0.5) / n as f64;
        if let Ok(tc) = classical_period(e, g) {
            t.push(vec![fmt_f64(e), fmt_f64(tc)]);
        }
    }
    out.table("period_curve.csv", &t)?;

    out.table("selection.csv", &selections(&spec, &cfg.spectrum.labels, p.tau))?;

    let mut minima = Table::new(&["m", "n", "k", "E_k/J", "mismatch"]);
    let mut energies = Table::new(&["m", "n", "E_over_J"]);
    for &l in &cfg.spectrum.labels {
        for (k, r) in cr_local_minima(&spec, l, p.tau) {
            minima.push(vec![l.m.to_string(), l.n.to_string(), k.to_string(), fmt_f64(spec.energies[k] / j), fmt_f64(r)]);
        }
        for e in resonant_energies(l.m, l.n, p.tau, g).unwrap_or_default() {
            energies.push(vec![l.m.to_string(), l.n.to_string(), fmt_f64(e)]);
        }
    }
    out.table("cr_minima.csv", &minima)?;
    out.table("resonance_energies.csv", &energies)?;
    Ok(Outcome { artifacts: out, n_floquet_solves: 0, details: json!({ "dim": spec.dim(), "J": j }) })
}

fn floquet(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.model;
    let spec = h0_spectrum(p)?;
    let j = spec.j();
    let selection = selections(&spec, &cfg.floquet.labels, p.tau);
    let setup = setup_for(spec, p.tau)?;
    let energies = setup.h0.energies.clone();
    let fe = setup.eigensystem(p.epsilon)?;
    let n = fe.dim();

    // Continuation labels: eigensystems on a geometric ε ladder up to ε.
    let mut tracked: Option<Vec<usize>> = None;
    let mut min_overlap = 1.0f64;
    if cfg.floquet.track_labels && p.epsilon > 0.0 && cfg.floquet.track_steps > 0 {
        let steps = cfg.floquet.track_steps;
        let mut prev = setup.eigensystem(0.0)?;
        let mut label: Vec<usize> = prev.association.clone();
        for s in 1..=steps {
            let frac = if steps == 1 { 1.0 } else { (s - 1) as f64 / (steps - 1) as f64 };
            let next = if s == steps { fe.clone() } else { setup.eigensystem(p.epsilon * 1e-4f64.powf(1.0 - frac))? };
            let m = track_branch(&prev, &next)?;
            min_overlap = min_overlap.min(m.min_overlap);
            let mut nl = vec![0; n];
            for (i, &to) in m.perm.iter().enumerate() {
                nl[to] = label[i];
            }
            label = nl;
            prev = next;
        }
        tracked = Some(label);
    }

    let mut rows: Vec<(f64, Vec<String>)> = Vec::with_capacity(n);
    let mut prs = Vec::with_capacity(n);
    for c in 0..n {
        let w: Vec<f64> = (0..n).map(|r| fe.states[(r, c)].norm_sqr()).collect();
        let pr = 1.0 / w.iter().map(|x| x * x).sum::<f64>();
        let v = w.iter().zip(&energies).map(|(a, e)| a * e).sum::<f64>() / j;
        prs.push(pr);
        rows.push((
            v,
            vec![
                fmt_f64(fe.phases[c]),
                fe.association[c].to_string(),
                fmt_f64(fe.fmax[c]),
                fmt_f64(v),
                fmt_f64(pr),
                tracked.as_ref().map(|t| t[c].to_string()).unwrap_or_default(),
            ],
        ));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut t = Table::new(&["k", "phi_k", "assoc_n", "F_max", "V_k", "PR", "tracked_n"]);
    for (k, (_, mut r)) in rows.into_iter().enumerate() {
        r.insert(0, k.to_string());
        t.push(r);
    }
    let mut out = Artifacts::default();
    out.table("floquet.csv", &t)?;
    out.table("selection.csv", &selection)?;
    let details = json!({
        "J": j,
        "epsilon": p.epsilon,
        "association_injective": fe.is_injective(),
        "tracking_min_overlap": tracked.as_ref().map(|_| min_overlap),
        "max_PR": prs.iter().cloned().fold(0.0, f64::max),
    });
    Ok(Outcome { artifacts: out, n_floquet_solves: setup.solve_count(), details })
}

fn husimi(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.model;
    let spec = h0_spectrum(p)?;
    let dim = spec.dim();
    for s in &cfg.husimi.states {
        if s.k >= dim {
            return Err(qkam_core::Error::OutOfRange { index: s.k as i64, dim }.into());
        }
    }
    let g = cfg.husimi.grid;
    if g.n_q < 16 || g.n_p < 16 {
        return Err(CliError::Config(format!("husimi grid {}x{} below the 16-node minimum", g.n_q, g.n_p)));
    }
    let needs_floquet = cfg.husimi.states.iter().any(|s| s.source == StateSource::Floquet);
    let h0_states: Vec<_> = cfg.husimi.states.iter().filter(|s| s.source == StateSource::H0).map(|s| (s.k, spec.state(s.k))).collect();
    let mut states = Vec::new();
    let mut info = Vec::new();
    let mut solves = 0;
    if needs_floquet {
        let setup = setup_for(spec, p.tau)?;
        let sol = setup.solve(p.epsilon, false)?;
        solves = setup.solve_count();
        for s in cfg.husimi.states.iter().filter(|s| s.source == StateSource::Floquet) {
            let c = sol.column_for_level(s.k);
            let (n_star, f) = sol.fmax(c);
            info.push(json!({ "k": s.k, "assoc_n": n_star, "F_max": f, "PR": sol.participation_ratio(c) }));
            states.push((format!("husimi_floquet_{}.csv", s.k), setup.dicke_state(&sol, c)));
        }
    }
    for (k, st) in h0_states {
        states.push((format!("husimi_h0_{k}.csv"), st));
    }
    let mut out = Artifacts::default();
    for (name, st) in &states {
        let h = husimi_parallel(st, &g, cfg.workers)?;
        let mut t = Table::new(&["Q", "P", "value"]);
        for iq in 0..g.n_q {
            for ip in 0..g.n_p {
                t.push(vec![fmt_f64(g.q(iq)), fmt_f64(g.p(ip)), fmt_opt(h.at(iq, ip))]);
            }
        }
        out.table(name, &t)?;
    }
    Ok(Outcome { artifacts: out, n_floquet_solves: solves, details: json!({ "floquet_states": info }) })
}

fn poincare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.model;
    let b = &cfg.poincare;
    let g = couplings(p);
    let mp = MapParams::new(p.gamma_x, p.gamma_y, p.tau, p.epsilon);
    let mut seeds: Vec<(PhasePoint, String)> =
        seed_lattice(b.rings, b.per_ring, g).into_iter().map(|s| (s, "lattice".to_string())).collect();
    for &l in &b.resonance_seeds {
        for e in resonant_energies(l.m, l.n, p.tau, g)? {
            for i in 0..b.seeds_per_resonance {
                let phi = std::f64::consts::TAU * (i as f64 + 0.25) / b.seeds_per_resonance as f64;
                if let Some(pt) = point_on_contour(e, phi, g) {
                    seeds.push((pt, l.to_string()));
                }
            }
        }
    }
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![None; seeds.len()]);
    std::thread::scope(|s| {
        for _ in 0..cfg.workers.max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= seeds.len() {
                    break;
                }
                let r = stroboscopic_map(seeds[i].0, &mp, b.n_periods);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let results = results.into_inner().unwrap();
    let mut pts = Table::new(&["seed_id", "period_index", "Q", "P", "h0"]);
    let mut st = Table::new(&["seed_id", "Q0", "P0", "kind", "status", "max_energy_drift"]);
    let mut failures = 0;
    for (id, ((seed, kind), r)) in seeds.iter().zip(results).enumerate() {
        match r.expect("every seed runs") {
            Ok(rec) => {
                let all = std::iter::once(rec.initial).chain(rec.strobe_points.iter().copied());
                for (i, (pt, e)) in all.zip(&rec.energies).enumerate() {
                    pts.push(vec![id.to_string(), i.to_string(), fmt_f64(pt.q), fmt_f64(pt.p), fmt_f64(*e)]);
                }
                st.push(vec![id.to_string(), fmt_f64(seed.q), fmt_f64(seed.p), kind.clone(), "ok".into(), fmt_f64(rec.max_energy_drift())]);
            }
            Err(e) => {
                failures += 1;
                st.push(vec![id.to_string(), fmt_f64(seed.q), fmt_f64(seed.p), kind.clone(), e.to_string(), String::new()]);
            }
        }
    }
    let mut out = Artifacts::default();
    out.table("poincare.csv", &pts)?;
    out.table("seeds.csv", &st)?;
    let h0_check = seeds.first().map(|(s, _)| h0_classical(*s, g).ok());
    Ok(Outcome {
        artifacts: out,
        n_floquet_solves: 0,
        details: json!({ "n_seeds": seeds.len(), "failed_seeds": failures, "first_seed_h0": h0_check }),
    })
}

/// `ε_max` for many levels of one setup, shared across `workers` threads.
fn epsmax_levels(
    setup: &FloquetSetup,
    levels: &[usize],
    condition: Condition,
    scan: &ScanConfig,
    workers: usize,
) -> Vec<Result<EpsMaxResult, qkam_core::Error>> {
    let next = AtomicUsize::new(0);
    let out = Mutex::new((0..levels.len()).map(|_| None).collect::<Vec<_>>());
    std::thread::scope(|s| {
        for _ in 0..workers.max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= levels.len() {
                    break;
                }
                let r = epsilon_max_with(setup, levels[i], condition, scan);
                out.lock().unwrap()[i] = Some(r);
            });
        }
    });
    out.into_inner().unwrap().into_iter().map(|r| r.expect("every level runs")).collect()
}

fn epsmax(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.model;
    let b = &cfg.epsmax;
    let spec = h0_spectrum(p)?;
    let j = spec.j();
    let energies = spec.energies.clone();
    let mut sel_table = Table::new(&SELECTION_HEADER);
    let (levels, condition, tau) = match &b.target {
        Some(target) => {
            let s = target.select(&spec, p)?;
            sel_table.push(selection_row(&s));
            (vec![s.k], s.condition, s.tau_used)
        }
        None => {
            let levels = match &b.levels {
                Levels::All(AllLevels::All) => (0..spec.dim()).collect(),
                Levels::List(v) => v.clone(),
            };
            if levels.is_empty() {
                return Err(CliError::Config("epsmax needs a target or a non-empty level list".into()));
            }
            (levels, Condition::NR, p.tau)
        }
    };
    let setup = setup_for(spec, tau)?;
    let results = epsmax_levels(&setup, &levels, condition, &b.scan, cfg.workers);
    let mut t = Table::new(&EPSMAX_HEADER);
    let mut status = Vec::new();
    for (&k, r) in levels.iter().zip(results) {
        let e = energies.get(k).map(|e| e / j).unwrap_or(f64::NAN);
        match r {
            Ok(r) => {
                t.push(epsmax_row(&r, e));
                status.push(json!({ "k": k, "status": r.status, "bracket": r.bracket }));
            }
            Err(err) => {
                if levels.len() == 1 {
                    return Err(err.into());
                }
                t.push(vec![fmt_f64(j), k.to_string(), fmt_f64(e), condition.to_string(), String::new(), String::new(), String::new()]);
                status.push(json!({ "k": k, "error": err.to_string(), "module": err.module() }));
            }
        }
    }
    let mut out = Artifacts::default();
    out.table("epsmax.csv", &t)?;
    if b.target.is_some() {
        out.table("selection.csv", &sel_table)?;
    }
    let details = json!({ "J": j, "tau_used": tau, "condition": condition, "scan": b.scan, "levels": status });
    Ok(Outcome { artifacts: out, n_floquet_solves: setup.solve_count(), details })
}

fn scaling(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.model;
    let b = &cfg.scaling;
    let grid = b.j_grid.values();
    let run = run_scaling(b.target, &grid, p, &b.scan, b.budget, cfg.workers)?;
    let mut t = Table::new(&EPSMAX_HEADER);
    let mut sel = Table::new(&SELECTION_HEADER);
    for pt in &run.points {
        if let Some(s) = &pt.selection {
            sel.push(selection_row(s));
        }
        match (&pt.result, &pt.selection) {
            (Some(r), Some(s)) => t.push(epsmax_row(r, s.energy_over_j)),
            _ => t.push(vec![fmt_f64(pt.j), String::new(), String::new(), b.target.condition().to_string(), String::new(), String::new(), String::new()]),
        }
    }
    let mut out = Artifacts::default();
    out.table("scaling.csv", &t)?;
    out.table("selection.csv", &sel)?;
    let excluded: Vec<_> = run.excluded().into_iter().map(|(j, reason)| json!({ "J": j, "reason": reason })).collect();
    let fit = json!({
        "exponent": run.fit.map(|f| f.exponent),
        "prefactor": run.fit.map(|f| f.prefactor),
        "r_squared": run.fit.map(|f| f.r_squared),
        "n_points": run.fit.map(|f| f.n_points).unwrap_or(0),
        "excluded": excluded,
    });
    out.json("fit.json", &fit)?;
    let mut solves = run.n_floquet_solves;

    let mut collapse = serde_json::Value::Null;
    if let Some(c) = &b.collapse {
        let mut curves = Vec::new();
        let mut ct = Table::new(&["J", "k", "epsilon", "z", "F_max"]);
        for pt in &run.points {
            let Some(s) = &pt.selection else { continue };
            let pj = p.with_j(pt.j);
            let setup = setup_for(h0_spectrum(&pj)?, s.tau_used)?;
            let scale = pt.j.powf(c.power);
            let eps: Vec<f64> = (0..c.n_points)
                .map(|i| c.z_lo * (c.z_hi / c.z_lo).powf(i as f64 / (c.n_points.max(2) - 1) as f64) / scale)
                .collect();
            match fmax_curve(&setup, s.k, s.condition, &eps, &b.scan) {
                Ok(branch) => {
                    for bp in &branch {
                        ct.push(vec![fmt_f64(pt.j), s.k.to_string(), fmt_f64(bp.epsilon), fmt_f64(bp.epsilon * scale), fmt_f64(bp.fmax)]);
                    }
                    curves.push(FmaxCurve { j: pt.j, points: branch.iter().map(|bp| (bp.epsilon, bp.fmax)).collect() });
                }
                Err(e) => log::warn!("collapse curve at J = {}: {e}", pt.j),
            }
            solves += setup.solve_count();
        }
        out.table("fmax_curves.csv", &ct)?;
        let dev = collapse_check(&curves, c.power);
        collapse = json!({ "power": c.power, "max_deviation": dev.as_ref().ok(), "error": dev.err().map(|e| e.to_string()) });
    }

    let details = json!({
        "target": b.target,
        "j_grid": grid,
        "scan": b.scan,
        "seed_tau": p.tau,
        "budget": b.budget,
        "budget_exhausted": run.budget_exhausted,
        "collapse": collapse,
    });
    Ok(Outcome { artifacts: out, n_floquet_solves: solves, details })
}

pub const UPT_HEADER: [&str; 12] =
    ["J", "k", "condition", "a2", "a3", "s2_cr", "s2_nr", "a2_er", "c_k1_sq", "phi1_lo", "phi1_hi", "eps_max_pred"];

/// One report row; empty fields where a quantity does not apply.
pub fn upt_row(spec: &Spectrum, kick: &KickMatrix, target: ScalingTarget, p: &ModelParams) -> Result<Vec<String>, CliError> {
    let s = target.select(spec, p)?;
    let j = spec.j();
    let e = &spec.energies;
    let mut row = vec![fmt_f64(j), s.k.to_string(), s.condition.to_string()];
    match s.condition {
        Condition::NR | Condition::CR => {
            let u = non_degenerate(e, kick, s.tau_used, s.k)?;
            let (cr, nr) = match s.label {
                Some(l) => {
                    let (a, b) = s2_split(e, kick, s.tau_used, s.k, l)?;
                    (Some(a), Some(b))
                }
                None => (None, None),
            };
            let pred = predict_eps_max(EpsMaxCoefficients::Series { a2: u.a2, a3: Some(u.a3) }, s.condition, j).ok();
            row.extend([fmt_f64(u.a2), fmt_f64(u.a3), fmt_opt(cr), fmt_opt(nr), String::new(), String::new(), String::new(), String::new(), fmt_opt(pred)]);
        }
        Condition::ER => {
            let m = s.label.map(|l| l.m as usize).unwrap_or(1);
            let blk = degenerate_block(kick, j, s.k, m)?;
            let a2 = er_a2(e, kick, s.tau_used, &blk, 0)?;
            let pred = predict_eps_max(EpsMaxCoefficients::Exact { a2_er: a2, offset_c: blk.offset_c() }, Condition::ER, j).ok();
            let (lo, hi) = (blk.phi1_pair[0].min(blk.phi1_pair[1]), blk.phi1_pair[0].max(blk.phi1_pair[1]));
            row.extend([String::new(), String::new(), String::new(), String::new(), fmt_f64(a2), fmt_f64(blk.c_k1_sq()), fmt_f64(lo), fmt_f64(hi), fmt_opt(pred)]);
        }
    }
    Ok(row)
}

fn upt(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.model;
    let grid = cfg.upt.j_grid.as_ref().map(JGrid::values).unwrap_or_else(|| vec![p.j]);
    let mut t = Table::new(&UPT_HEADER);
    let mut failures = Vec::new();
    for &j in &grid {
        let pj = p.with_j(j);
        let spec = h0_spectrum(&pj)?;
        let kick = KickMatrix::new(&spec);
        for &target in &cfg.upt.targets {
            match upt_row(&spec, &kick, target, &pj) {
                Ok(r) => t.push(r),
                Err(e) => failures.push(json!({ "J": j, "target": target, "error": e.to_string() })),
            }
        }
    }
    let mut out = Artifacts::default();
    out.table("upt.csv", &t)?;
    Ok(Outcome { artifacts: out, n_floquet_solves: 0, details: json!({ "j_grid": grid, "failures": failures }) })
}
