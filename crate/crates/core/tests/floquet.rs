use std::sync::Arc;

use faer::c64;
use proptest::prelude::*;
use qkam_core::diagnostics::{max_fidelity, participation_ratio};
use qkam_core::floquet::{
    associate_states, build_floquet, diagonalize_unitary, phase_distance, track_branch, wrap_phase, FloquetSetup,
    StateBasis,
};
use qkam_core::linalg::unitarity_residual;
use qkam_core::lmg::{h0_spectrum, kick_spectrum, ModelParams, Spectrum};

fn model(j: f64, tau: f64) -> (Arc<Spectrum>, Spectrum) {
    let p = ModelParams::new(j, -0.95, 0.0, tau, 0.0).unwrap();
    (Arc::new(h0_spectrum(&p).unwrap()), kick_spectrum(p.rep().unwrap()).unwrap())
}

fn y_unsorted(es: &qkam_core::floquet::FloquetEigensystem, h0: &Spectrum) -> Vec<f64> {
    associate_states(es, h0).unwrap().1
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn floquet_operator_is_unitary() {
    let (h0, kick) = model(15.0, 8.0);
    for eps in [0.0, 1e-3, 0.3, 2.0] {
        let f = build_floquet(&h0, &kick, 8.0, eps).unwrap();
        assert!(unitarity_residual(&f) < 1e-12, "eps={eps}");
    }
}

#[test]
fn unkicked_states_are_the_h0_eigenstates() {
    let (h0, kick) = model(12.0, 8.0);
    let setup = FloquetSetup::new(h0.clone(), &kick, 8.0).unwrap();
    let es = setup.eigensystem(0.0).unwrap();
    assert!(es.fmax.iter().all(|&f| (f - 1.0).abs() < 1e-12));
    let want = sorted(h0.energies.iter().map(|e| wrap_phase(8.0 * e)).collect());
    for (a, b) in es.phases.iter().zip(&want) {
        assert!(phase_distance(*a, *b) < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fast_path_agrees_with_general_eigensolver(eps in 1e-6f64..1.0, tau in 0.5f64..12.0, twice_j in 4u32..30) {
        let j = twice_j as f64 / 2.0;
        let (h0, kick) = model(j, tau);
        let setup = FloquetSetup::new(h0.clone(), &kick, tau).unwrap();
        let fast = setup.eigensystem(eps).unwrap();
        let general = diagonalize_unitary(&build_floquet(&h0, &kick, tau, eps).unwrap(), StateBasis::Dicke, tau, eps).unwrap();
        let (assoc, fmax, _) = associate_states(&general, &h0).unwrap();
        // phases as multisets on the circle
        for &a in &fast.phases {
            let d = general.phases.iter().map(|&b| phase_distance(a, b)).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-9);
        }
        // F_max is a property of each state; compare the sorted lists
        let (x, y) = (sorted(fast.fmax.clone()), sorted(fmax));
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-7);
        }
        let mut pairs_fast: Vec<(usize, i64)> = fast.association.iter().zip(&fast.fmax).map(|(&n, &f)| (n, (f * 1e6).round() as i64)).collect();
        let mut pairs_gen: Vec<(usize, i64)> = assoc.iter().zip(&y_unsorted(&general, &h0)).map(|(&n, &f)| (n, (f * 1e6).round() as i64)).collect();
        pairs_fast.sort();
        pairs_gen.sort();
        let agree = pairs_fast.iter().zip(&pairs_gen).filter(|(a, b)| a.0 == b.0).count();
        prop_assert!(agree == pairs_fast.len() || x.iter().any(|&f| f < 0.5 + 1e-6));
    }

    #[test]
    fn localization_measures_ignore_a_global_phase(theta in 0.0f64..std::f64::consts::TAU, eps in 1e-4f64..0.5) {
        let (h0, kick) = model(10.0, 8.0);
        let setup = FloquetSetup::new(h0.clone(), &kick, 8.0).unwrap();
        let sol = setup.solve(eps, false).unwrap();
        for j in [0usize, 7, 20] {
            let v = setup.dicke_state(&sol, j);
            let w: Vec<c64> = v.iter().map(|c| c * c64::cis(theta)).collect();
            let (pa, pb) = (participation_ratio(&v, &h0).unwrap(), participation_ratio(&w, &h0).unwrap());
            prop_assert!((pa - pb).abs() < 1e-10 * pa);
            let (fa, fb) = (max_fidelity(&v, &h0).unwrap(), max_fidelity(&w, &h0).unwrap());
            prop_assert_eq!(fa.0, fb.0);
            prop_assert!((fa.1 - fb.1).abs() < 1e-12);
            prop_assert!((pa - sol.participation_ratio(j)).abs() < 1e-8 * pa);
        }
    }
}

#[test]
fn tracking_a_branch_onto_itself_is_the_identity() {
    let (h0, kick) = model(20.0, 8.0);
    let setup = FloquetSetup::new(h0, &kick, 8.0).unwrap();
    let es = setup.eigensystem(0.05).unwrap();
    let m = track_branch(&es, &es).unwrap();
    assert!(m.perm.iter().enumerate().all(|(i, &p)| i == p));
    assert!(m.min_overlap > 1.0 - 1e-10);
}

#[test]
fn column_lookup_follows_the_association() {
    let (h0, kick) = model(25.0, 8.0);
    let setup = FloquetSetup::new(h0, &kick, 8.0).unwrap();
    let sol = setup.solve(1e-3, false).unwrap();
    for n in 0..sol.dim() {
        let c = sol.column_for_level(n);
        let (best, f) = sol.fmax(c);
        assert_eq!(best, n);
        assert!(f > 0.5);
    }
}
