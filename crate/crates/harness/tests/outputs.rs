//! CSV round trips and Monte Carlo parity with single runs.

use std::fs;
use std::path::{Path, PathBuf};

use mabeam::baselines::BaselineKind;
use mabeam_harness::config::{KindSpec, LayoutSource, Length, TargetSpec};
use mabeam_harness::output::{
    read_heatmap, read_montecarlo, read_robust, read_run, write_heatmap, write_montecarlo,
    write_robust, write_run,
};
use mabeam_harness::{
    heatmap, monte_carlo, robust, run_scenario, DropDistribution, HeatmapGrid, ScenarioConfig,
    Scheme,
};
use proptest::prelude::*;

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"))
        .join("outputs")
        .join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn quick() -> ScenarioConfig {
    let mut c = ScenarioConfig::default();
    c.grid.samples = 180;
    c.grid.rounds = 3;
    c.swarm.particles = 8;
    c.swarm.iterations = 10;
    c
}

#[test]
fn run_round_trip() {
    let dir = scratch("run");
    for (kind, scheme) in [
        (KindSpec::Nulling, Scheme::Proposed),
        (KindSpec::Multibeam, Scheme::Proposed),
        (KindSpec::Multibeam, Scheme::Baseline(BaselineKind::Sa)),
    ] {
        let mut c = quick();
        c.scenario = kind;
        let rec = run_scenario(&c, scheme).unwrap();
        write_run(&dir, "r", &rec).unwrap();
        assert_eq!(read_run(&dir, "r").unwrap(), rec);
    }
}

#[test]
fn robust_round_trip() {
    let dir = scratch("robust");
    let mut aligned = ScenarioConfig::default();
    aligned.scenario = KindSpec::Multibeam;
    aligned.target0 = TargetSpec::new(8.94, 2.03);
    aligned.users = vec![TargetSpec::new(7.61, 1.16)];
    aligned.robust.layout = LayoutSource::Construct;
    for c in [ScenarioConfig::default(), aligned] {
        let study = robust(&c).unwrap();
        write_robust(&dir, &study).unwrap();
        assert_eq!(read_robust(&dir).unwrap(), study);
    }
}

#[test]
fn montecarlo_round_trip() {
    let dir = scratch("montecarlo");
    let c = quick();
    let dist = DropDistribution {
        trials: 3,
        ..Default::default()
    };
    let table = monte_carlo(
        &c,
        &dist,
        &[Scheme::Proposed, Scheme::Baseline(BaselineKind::Fpa)],
    )
    .unwrap();
    write_montecarlo(&dir, &table).unwrap();
    assert_eq!(read_montecarlo(&dir).unwrap(), table);
}

#[test]
fn heatmap_round_trip_keeps_nan() {
    let dir = scratch("heatmap");
    let c = quick();
    let rec = run_scenario(&c, Scheme::Baseline(BaselineKind::Fpa)).unwrap();
    let grid = HeatmapGrid::Cartesian {
        x: [-2.0, 2.0],
        y: [0.0, 3.0],
        nx: 5,
        ny: 4,
    };
    let map = heatmap(&rec, c.wavelength, &grid).unwrap();
    write_heatmap(&dir, "h", &map).unwrap();
    let back = read_heatmap(&dir, "h").unwrap();
    assert_eq!(
        (back.polar, &back.cols, &back.rows),
        (false, &map.cols, &map.rows)
    );
    for (a, b) in back.gains.iter().flatten().zip(map.gains.iter().flatten()) {
        assert!(a == b || (a.is_nan() && b.is_nan()));
    }
    assert!(back.gains[0][2].is_nan());
}

#[test]
fn single_trial_matches_direct_runs() {
    let mut c = quick();
    c.seed = 99;
    let schemes = [
        Scheme::Proposed,
        Scheme::Baseline(BaselineKind::Fpa),
        Scheme::Baseline(BaselineKind::Pso),
    ];
    let dist = DropDistribution {
        trials: 1,
        ..Default::default()
    };
    let table = monte_carlo(&c, &dist, &schemes).unwrap();
    let trial = &table.trials[0];
    let direct = c.with_targets(trial.target0, &trial.users);
    for (i, &s) in schemes.iter().enumerate() {
        let rec = run_scenario(&direct, s).unwrap();
        assert_eq!(rec.objective, trial.objectives[i], "{s}");
        assert_eq!(table.summary[i].mean, rec.objective);
    }
}

proptest! {
    #[test]
    fn length_expressions_scale(n in 1usize..32, lambda in 1e-3f64..1.0, c in 0.1f64..20.0) {
        let v = Length::from(format!("{c}*N*lambda").as_str()).eval(n, lambda).unwrap();
        prop_assert!((v - c * n as f64 * lambda).abs() <= 1e-12 * v.abs());
        let half = Length::from("lambda/2").eval(n, lambda).unwrap();
        prop_assert_eq!(half, lambda / 2.0);
    }

    #[test]
    fn config_toml_round_trip(seed in any::<u64>(), n in 2usize..12, th in 0.1f64..3.0) {
        let mut c = ScenarioConfig::default();
        c.seed = seed;
        c.n_antennas = n;
        c.target0.angle = th;
        let back = ScenarioConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        prop_assert_eq!(back, c);
    }
}
