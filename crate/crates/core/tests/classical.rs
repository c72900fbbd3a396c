use std::f64::consts::TAU;

use proptest::prelude::*;
use qkam_core::classical::{
    classical_period, h0_classical, jacobian_determinant, kick_classical, map_step, map_step_inverse,
    resonant_energies, Couplings, MapParams, PhasePoint,
};
use qkam_core::lmg::{h0_spectrum, ModelParams};
use qkam_core::resonance::ResonanceLabel;
use qkam_core::scaling::ScalingTarget;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn uncoupled_orbits_all_take_two_pi(e in -0.999f64..0.999) {
        let t = classical_period(e, Couplings::new(0.0, 0.0)).unwrap();
        prop_assert!((t - TAU).abs() < 1e-10);
    }

    #[test]
    fn inverse_step_undoes_the_map(r in 0.05f64..1.7, phi in 0.0f64..TAU, eps in 0.0f64..0.3) {
        let mp = MapParams::new(-0.95, 0.0, 8.0, eps);
        let pt = PhasePoint::new(r * phi.cos(), r * phi.sin());
        let back = map_step_inverse(map_step(pt, &mp).unwrap(), &mp).unwrap();
        prop_assert!((back.q - pt.q).abs() < 1e-8 && (back.p - pt.p).abs() < 1e-8);
    }

    #[test]
    fn map_preserves_area(r in 0.1f64..1.6, phi in 0.0f64..TAU) {
        let mp = MapParams::new(-0.95, 0.0, 8.0, 0.05);
        let det = jacobian_determinant(PhasePoint::new(r * phi.cos(), r * phi.sin()), &mp, 1e-5).unwrap();
        prop_assert!((det - 1.0).abs() < 1e-5, "det = {}", det);
    }
}

#[test]
fn reference_values_of_the_generators() {
    let g = Couplings::new(-0.95, 0.0);
    assert!((h0_classical(PhasePoint::new(0.0, 0.0), g).unwrap() + 1.0).abs() < 1e-15);
    assert!((kick_classical(PhasePoint::new(2.0f64.sqrt(), 0.0)).unwrap() - 1.0).abs() < 1e-15);
    assert!((kick_classical(PhasePoint::new(0.0, 0.0)).unwrap() + 1.0).abs() < 1e-15);
}

#[test]
fn resonant_energies_have_the_resonant_period() {
    let g = Couplings::new(-0.95, 0.0);
    for (m, n) in [(1, 1), (2, 3), (3, 4), (2, 1)] {
        let es = resonant_energies(m, n, 8.0, g).unwrap();
        assert!(!es.is_empty(), "{m}:{n}");
        for e in es {
            let t = classical_period(e, g).unwrap();
            assert!((n as f64 * t - m as f64 * 8.0).abs() < 1e-8, "{m}:{n} e={e} T={t}");
        }
    }
}

#[test]
fn quantum_resonance_sits_on_the_classical_one() {
    let j = 500.0;
    let p = ModelParams::new(j, -0.95, 0.0, 8.0, 0.0).unwrap();
    let spec = h0_spectrum(&p).unwrap();
    let g = Couplings::new(-0.95, 0.0);
    for (m, n) in [(1, 1), (2, 3)] {
        let sel = ScalingTarget::Cr { label: ResonanceLabel::new(m, n).unwrap() }.select(&spec, &p).unwrap();
        let es = resonant_energies(m, n, 8.0, g).unwrap();
        let d = es.iter().map(|e| (e - sel.energy_over_j).abs()).fold(f64::INFINITY, f64::min);
        assert!(d < 3.0 / j, "{m}:{n} E/J={} classical={es:?}", sel.energy_over_j);
    }
}
