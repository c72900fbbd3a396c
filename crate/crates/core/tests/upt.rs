use std::sync::Arc;

use proptest::prelude::*;
use qkam_core::floquet::{phase_distance, FloquetSetup};
use qkam_core::lmg::{h0_spectrum, kick_spectrum, KickMatrix, ModelParams, Spectrum};
use qkam_core::resonance::{tune_tau_er, ResonanceLabel};
use qkam_core::upt::{degenerate_block, er_a2, fmax_er, non_degenerate, s2_split};

fn spectrum(j: f64) -> (Arc<Spectrum>, KickMatrix) {
    let p = ModelParams::new(j, -0.95, 0.0, 8.0, 0.0).unwrap();
    let spec = Arc::new(h0_spectrum(&p).unwrap());
    let km = KickMatrix::new(&spec);
    (spec, km)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn s2_parts_add_up_to_a2(k in 0usize..41, m in 1u32..4, n in 1u32..5) {
        let (spec, km) = spectrum(20.0);
        let u = non_degenerate(&spec.energies, &km, 8.0, k).unwrap();
        let (cr, nr) = s2_split(&spec.energies, &km, 8.0, k, ResonanceLabel::new(m, n).unwrap()).unwrap();
        prop_assert!((cr + nr - u.a2).abs() <= 1e-10 * u.a2);
    }
}

#[test]
fn one_to_one_ladder_leaves_no_non_resonant_part() {
    let (spec, km) = spectrum(30.0);
    for k in [3, 17, 44] {
        let (_, nr) = s2_split(&spec.energies, &km, 8.0, k, ResonanceLabel::new(1, 1).unwrap()).unwrap();
        assert_eq!(nr, 0.0);
    }
}

#[test]
fn quasienergy_series_matches_exact_phase_to_third_order() {
    let j = 20.0;
    let (spec, km) = spectrum(j);
    let p = ModelParams::new(j, -0.95, 0.0, 8.0, 0.0).unwrap();
    let kick = kick_spectrum(p.rep().unwrap()).unwrap();
    let setup = FloquetSetup::new(spec.clone(), &kick, 8.0).unwrap();
    for k in [5usize, 14, 30] {
        let u = non_degenerate(&spec.energies, &km, 8.0, k).unwrap();
        let errs: Vec<f64> = [1e-4, 2e-4, 4e-4]
            .iter()
            .map(|&eps| {
                let sol = setup.solve(eps, true).unwrap();
                let exact = sol.phases.as_ref().unwrap()[sol.column_for_level(k)];
                phase_distance(exact, u.phase_series(eps))
            })
            .collect();
        // doubling ε multiplies a third-order remainder by ~8
        for w in errs.windows(2) {
            let ratio = w[1] / w[0];
            assert!((5.0..12.0).contains(&ratio), "k={k} errs={errs:?}");
        }
    }
}

#[test]
fn first_order_state_gives_the_fidelity_curvature() {
    let j = 20.0;
    let (spec, km) = spectrum(j);
    let p = ModelParams::new(j, -0.95, 0.0, 8.0, 0.0).unwrap();
    let kick = kick_spectrum(p.rep().unwrap()).unwrap();
    let setup = FloquetSetup::new(spec.clone(), &kick, 8.0).unwrap();
    let sol = setup.solve(1e-6, false).unwrap();
    for k in [2usize, 11, 25, 38] {
        let u = non_degenerate(&spec.energies, &km, 8.0, k).unwrap();
        let exact = sol.one_minus_weight(k, sol.column_for_level(k)) / 1e-12;
        assert!((exact - u.a2).abs() < 1e-3 * u.a2, "k={k} exact={exact} a2={}", u.a2);
    }
}

#[test]
fn degenerate_prediction_starts_at_the_block_weight() {
    let (spec, km) = spectrum(100.0);
    let er = tune_tau_er(&spec, ResonanceLabel::new(1, 1).unwrap(), 8.0).unwrap();
    let blk = degenerate_block(&km, 100.0, er.k, 1).unwrap();
    assert!((0.5..=1.0).contains(&blk.c_k1_sq()));
    let norm: f64 = blk.c[0].iter().map(|x| x * x).sum();
    assert!((norm - 1.0).abs() < 1e-12);
    let orth = blk.c[0][0] * blk.c[1][0] + blk.c[0][1] * blk.c[1][1];
    assert!(orth.abs() < 1e-12);
    let a2 = er_a2(&spec.energies, &km, er.tau_used, &blk, 0).unwrap();
    assert!(a2 > 0.0);
    assert_eq!(fmax_er(&blk, a2, 0.0), blk.c_k1_sq());
    assert!(fmax_er(&blk, a2, 1e-4) < blk.c_k1_sq());
}

#[test]
fn degenerate_prediction_tracks_exact_fidelity_at_moderate_j() {
    let j = 200.0;
    let (spec, km) = spectrum(j);
    let er = tune_tau_er(&spec, ResonanceLabel::new(1, 1).unwrap(), 8.0).unwrap();
    let blk = degenerate_block(&km, j, er.k, 1).unwrap();
    let a2 = er_a2(&spec.energies, &km, er.tau_used, &blk, 0).unwrap();
    let p = ModelParams::new(j, -0.95, 0.0, er.tau_used, 0.0).unwrap();
    let kick = kick_spectrum(p.rep().unwrap()).unwrap();
    let setup = FloquetSetup::new(spec.clone(), &kick, er.tau_used).unwrap();
    for eps in [1e-7, 1e-6, 5e-6] {
        let es = setup.eigensystem(eps).unwrap();
        // the state of the pair with the larger weight on E_k
        let col = (0..es.dim()).max_by(|&a, &b| es.states[(er.k, a)].norm().total_cmp(&es.states[(er.k, b)].norm())).unwrap();
        let f = es.states[(er.k, col)].norm_sqr().max(es.fmax[col]);
        assert!((f - fmax_er(&blk, a2, eps)).abs() < 2e-3, "eps={eps} exact={f} pred={}", fmax_er(&blk, a2, eps));
    }
}
