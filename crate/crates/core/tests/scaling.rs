use proptest::prelude::*;
use qkam_core::epsmax::ScanConfig;
use qkam_core::lmg::ModelParams;
use qkam_core::scaling::{dominance_threshold, fit_power_law, run_scaling, scaling_point, ScalingTarget};

proptest! {
    #[test]
    fn power_law_fit_recovers_exact_data(a in 0.01f64..100.0, p in -3.0f64..3.0, n in 3usize..12) {
        let pts: Vec<(f64, f64)> = (0..n).map(|i| {
            let x = 10.0 * 1.7f64.powi(i as i32);
            (x, a * x.powf(p))
        }).collect();
        let fit = fit_power_law(&pts).unwrap();
        prop_assert!((fit.exponent - p).abs() < 1e-10);
        prop_assert!((fit.prefactor / a - 1.0).abs() < 1e-9);
        prop_assert!(fit.r_squared > 1.0 - 1e-12 || p.abs() < 1e-6);
    }

    #[test]
    fn equal_terms_cross_at_unit_j(a in 1e-3f64..1e3) {
        prop_assert!((dominance_threshold(a, a, 1.0).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn threshold_rejects_non_positive_coefficients() {
    assert!(dominance_threshold(0.0, 1.0, 1e-3).is_err());
    assert!(dominance_threshold(1.0, -1.0, 1e-3).is_err());
}

#[test]
fn exhausted_budget_flags_the_remaining_points() {
    let p = ModelParams::new(20.0, -0.95, 0.0, 8.0, 0.0).unwrap();
    let grid = [10.0, 12.0, 14.0, 16.0, 18.0, 20.0];
    let run = run_scaling(ScalingTarget::Nr { energy_over_j: -0.5 }, &grid, &p, &ScanConfig::default(), 1, 1).unwrap();
    assert!(run.budget_exhausted);
    assert!(run.points[0].result.is_some());
    assert!(run.points[1..].iter().all(|pt| pt.result.is_none() && pt.failure.is_some()));
    assert!(run.fit.is_none());
}

#[test]
fn scaling_run_rejects_short_or_unsorted_grids() {
    let p = ModelParams::new(20.0, -0.95, 0.0, 8.0, 0.0).unwrap();
    let t = ScalingTarget::Nr { energy_over_j: -0.5 };
    assert!(run_scaling(t, &[10.0, 12.0, 14.0], &p, &ScanConfig::default(), 100, 1).is_err());
    assert!(run_scaling(t, &[10.0, 12.0, 11.0, 14.0, 16.0], &p, &ScanConfig::default(), 100, 1).is_err());
}

#[test]
fn eps_max_does_not_depend_on_the_coarse_scan_density() {
    let p = ModelParams::new(20.0, -0.95, 0.0, 8.0, 0.0).unwrap();
    let fine = ScanConfig { n_geometric: 96, ..ScanConfig::default() };
    for target in [ScalingTarget::Nr { energy_over_j: -0.85 }, ScalingTarget::Nr { energy_over_j: 0.3 }] {
        let (_, a) = scaling_point(target, 20.0, &p, &ScanConfig::default()).unwrap();
        let (_, b) = scaling_point(target, 20.0, &p, &fine).unwrap();
        let (a, b) = (a.eps_max.unwrap(), b.eps_max.unwrap());
        assert!((a / b - 1.0).abs() < 1e-3, "{a} vs {b}");
    }
}

#[test]
fn workers_do_not_change_the_result() {
    let p = ModelParams::new(20.0, -0.95, 0.0, 8.0, 0.0).unwrap();
    let grid = [10.0, 12.0, 14.0, 16.0, 18.0];
    let t = ScalingTarget::Nr { energy_over_j: -0.85 };
    let one = run_scaling(t, &grid, &p, &ScanConfig::default(), 10_000, 1).unwrap();
    let three = run_scaling(t, &grid, &p, &ScanConfig::default(), 10_000, 3).unwrap();
    assert_eq!(one.successes(), three.successes());
    assert_eq!(one.n_floquet_solves, three.n_floquet_solves);
}
