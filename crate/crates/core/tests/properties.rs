//! Cross-module invariants on random near-field instances.

use mabeam::baselines::{run_baseline, BaselineConfig, BaselineKind};
use mabeam::construct::{nulling_apv_single, phase_coeffs, AperturePolicy};
use mabeam::geometry::{gain, steering_vector};
use mabeam::multibeam_opt::{solve_p3, ScaConfig};
use mabeam::nulling_opt::{solve_p2, GridSearchConfig};
use mabeam::robustness::{
    build_sensitivity, nulling_leakage_gain, worstcase_nulling, WorstCaseConfig,
};
use mabeam::{ArrayLimits, DistanceModel, PolarTarget, Scenario, ScenarioKind};
use proptest::prelude::*;

const LAMBDA: f64 = 0.06;

fn limits() -> ArrayLimits {
    ArrayLimits::new(9.0 * LAMBDA, LAMBDA / 2.0, LAMBDA).unwrap()
}

fn target() -> impl Strategy<Value = PolarTarget> {
    (3.0f64..9.7, 0.2f64..2.9).prop_map(|(r, th)| PolarTarget::new(r, th).unwrap())
}

fn monotone(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] >= w[0] - 1e-9)
}

fn quick_grid(n: usize) -> GridSearchConfig {
    GridSearchConfig {
        samples: 30 * n,
        rounds: 3,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nulling_search_is_monotone_feasible_and_nulls(
        n in 3usize..8,
        t0 in target(),
        users in prop::collection::vec(target(), 1..3),
    ) {
        let s = Scenario::new(limits(), n, t0, users.clone(), ScenarioKind::Nulling).unwrap();
        let Ok(sol) = solve_p2(&s, &quick_grid(n)) else { return Ok(()) };
        prop_assert!(monotone(&sol.trace));
        prop_assert!(limits().is_feasible(sol.apv.positions()));
        prop_assert!(sol.zf.target_gain <= n as f64 + 1e-9);
        for u in &users {
            let a = steering_vector(sol.apv.positions(), u, LAMBDA, DistanceModel::Approx);
            prop_assert!(gain(sol.zf.weights.as_slice(), &a) <= 1e-10 * n as f64);
        }
    }

    #[test]
    fn multibeam_search_is_monotone_and_feasible(
        n in 3usize..8,
        t0 in target(),
        users in prop::collection::vec(target(), 1..3),
    ) {
        let s = Scenario::new(limits(), n, t0, users, ScenarioKind::Multibeam).unwrap();
        let sol = solve_p3(&s, &quick_grid(n), &ScaConfig::default(), 5).unwrap();
        prop_assert!(monotone(&sol.trace));
        prop_assert!(limits().is_feasible(sol.apv.positions()));
        let min = sol.gains.iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!((min - sol.delta).abs() <= 1e-12);
        prop_assert!(sol.delta <= n as f64 + 1e-9);
        prop_assert!(sol.delta >= sol.trace[0] - 1e-9);
    }

    #[test]
    fn baselines_return_feasible_layouts(
        n in 3usize..8,
        t0 in target(),
        users in prop::collection::vec(target(), 1..3),
    ) {
        let s = Scenario::new(limits(), n, t0, users, ScenarioKind::Nulling).unwrap();
        let mut cfg = BaselineConfig::default();
        cfg.grid = quick_grid(n);
        cfg.swarm.particles = 6;
        cfg.swarm.iterations = 8;
        for kind in BaselineKind::ALL {
            if let Ok(out) = run_baseline(kind, &s, &cfg) {
                prop_assert!(limits().is_feasible(out.apv.positions()), "{kind:?}");
            }
        }
    }

    #[test]
    fn worst_case_sits_between_samples_and_the_relaxation(
        n in 3usize..8,
        t0 in target(),
        user in target(),
        eps_over_lambda in 0.01f64..0.3,
        signs in prop::collection::vec(any::<bool>(), 8),
    ) {
        let c = phase_coeffs(&t0, &user);
        let Ok(apv) = nulling_apv_single(&c, n, &limits(), AperturePolicy::Relaxed) else {
            return Ok(())
        };
        let model = build_sensitivity(apv.positions(), &t0, &[user], LAMBDA);
        let eps = eps_over_lambda * LAMBDA;
        let wc = worstcase_nulling(&model, eps, &WorstCaseConfig::default()).unwrap();
        prop_assert!(wc.leakage <= wc.sdr_upper_bound * (1.0 + 1e-9));
        prop_assert!(wc.delta_d.iter().all(|d| d.abs() <= eps * (1.0 + 1e-12)));
        let vertex: Vec<f64> = signs[..n].iter().map(|&s| if s { eps } else { -eps }).collect();
        prop_assert!(nulling_leakage_gain(&model, &vertex).unwrap() <= wc.leakage * (1.0 + 1e-12));
    }
}
