//! Single runs: one scheme on one configuration.

use std::fmt;
use std::str::FromStr;

use mabeam::baselines::{evaluate, run_baseline, BaselineConfig, BaselineKind};
use mabeam::beamforming::mrt_weights;
use mabeam::construct::{
    aligned_apv_single, construct_optimal_apv, grating_lobe_spacing, phase_coeffs, PhaseCoeffs,
};
use mabeam::multibeam_opt::solve_p3;
use mabeam::nulling_opt::solve_p2;
use mabeam::robustness::{
    build_sensitivity, perturbed_mrt_gains, refine_mrt_nulls, worstcase_multibeam,
    worstcase_nulling, NULL_TOL,
};
use mabeam::{Apv, BeamWeights, Complex64, DistanceModel, PolarTarget, Scenario, ScenarioKind};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{LayoutSource, ScenarioConfig};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Grid search with ZF (nulling) or alternating SCA (multi-beam).
    Proposed,
    /// Closed-form layout with MRT toward the target.
    Construct,
    Baseline(BaselineKind),
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Construct => "construct",
            Scheme::Baseline(k) => k.name(),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Scheme::Proposed),
            "construct" => Ok(Scheme::Construct),
            other => other
                .parse::<BaselineKind>()
                .map(Scheme::Baseline)
                .map_err(|_| HarnessError::Config(format!("unknown scheme `{s}`"))),
        }
    }
}

/// Outcome of one scheme on one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scheme: Scheme,
    pub kind: ScenarioKind,
    pub apv: Vec<f64>,
    pub weights: Vec<Complex64>,
    /// Target first, then the users.
    pub targets: Vec<PolarTarget>,
    /// Near-field gains in `targets` order.
    pub gains: Vec<f64>,
    /// Target gain for nulling, minimum gain for multi-beam.
    pub objective: f64,
    /// Objective after each update of the iterative schemes; empty otherwise.
    pub trace: Vec<f64>,
}

impl RunRecord {
    fn new(scheme: Scheme, scenario: &Scenario, apv: Apv, w: BeamWeights, trace: Vec<f64>) -> Self {
        let eval = evaluate(scenario, apv.positions(), w.as_slice());
        Self {
            scheme,
            kind: scenario.kind,
            apv: apv.into_inner(),
            weights: w.into_inner(),
            targets: scenario.all_targets(),
            gains: eval.gains,
            objective: eval.objective,
            trace,
        }
    }
}

pub fn run_scenario(config: &ScenarioConfig, scheme: Scheme) -> Result<RunRecord> {
    let scenario = config.scenario()?;
    run_on(config, &scenario, &config.baseline_config()?, scheme)
}

/// Runs `scheme` on a prepared scenario; the configuration supplies the knobs.
pub(crate) fn run_on(
    config: &ScenarioConfig,
    scenario: &Scenario,
    knobs: &BaselineConfig,
    scheme: Scheme,
) -> Result<RunRecord> {
    Ok(match scheme {
        Scheme::Proposed => match scenario.kind {
            ScenarioKind::Nulling => {
                let sol = solve_p2(scenario, &knobs.grid)?;
                RunRecord::new(scheme, scenario, sol.apv, sol.zf.weights, sol.trace)
            }
            ScenarioKind::Multibeam => {
                let sol = solve_p3(scenario, &knobs.grid, &knobs.sca, knobs.ao_max_iters)?;
                RunRecord::new(scheme, scenario, sol.apv, sol.weights, sol.trace)
            }
        },
        Scheme::Construct => {
            let apv = constructed_layout(config, scenario)?;
            let w = mrt_weights(
                apv.positions(),
                &scenario.target0,
                scenario.wavelength(),
                DistanceModel::Approx,
            );
            RunRecord::new(scheme, scenario, apv, w, Vec::new())
        }
        Scheme::Baseline(kind) => {
            let out = run_baseline(kind, scenario, knobs)?;
            RunRecord::new(scheme, scenario, out.apv, out.weights, Vec::new())
        }
    })
}

fn coeffs(scenario: &Scenario) -> Vec<PhaseCoeffs> {
    scenario
        .users
        .iter()
        .map(|u| phase_coeffs(&scenario.target0, u))
        .collect()
}

/// Nulling layout (product construction) or grating-lobe layout.
fn constructed_layout(config: &ScenarioConfig, scenario: &Scenario) -> Result<Apv> {
    let policy = config.construct.policy();
    let n = scenario.n_antennas;
    Ok(match scenario.kind {
        ScenarioKind::Nulling => construct_optimal_apv(
            &scenario.target0,
            &scenario.users,
            n,
            &scenario.limits,
            policy,
        )?,
        ScenarioKind::Multibeam => {
            let c = coeffs(scenario);
            if c.len() == 1 {
                aligned_apv_single(&c[0], n, &scenario.limits, policy)?
            } else {
                grating_lobe_spacing(&c, &scenario.limits, &config.construct.rationalize())?.apv(
                    n,
                    &scenario.limits,
                    policy,
                )?
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustRow {
    pub epsilon_over_lambda: f64,
    pub epsilon: f64,
    /// First-order worst-case sum gain over the users.
    pub approx_sum_gain: f64,
    /// Sum of the re-steered MRT gains at the same error vector.
    pub exact_sum_gain: f64,
    /// Relaxation bound on `approx_sum_gain`; nulling only.
    pub sdr_upper_bound: Option<f64>,
    pub delta_d: Vec<f64>,
}

impl RobustRow {
    /// `|approx − exact|` in dB; zero when both vanish.
    pub fn gap_db(&self) -> f64 {
        if self.approx_sum_gain == self.exact_sum_gain {
            return 0.0;
        }
        (10.0 * self.approx_sum_gain.log10() - 10.0 * self.exact_sum_gain.log10()).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustStudy {
    pub kind: ScenarioKind,
    /// Nominal layout the errors are applied to.
    pub apv: Vec<f64>,
    pub rows: Vec<RobustRow>,
}

/// Nominal layout for the robustness sweep.
///
/// Nulling layouts are polished until MRT nulls every user, which may move
/// antennas slightly outside `[0, D_max]`.
pub fn robust_layout(config: &ScenarioConfig) -> Result<Apv> {
    let scenario = config.scenario()?;
    let apv = match config.robust.layout {
        LayoutSource::Construct => constructed_layout(config, &scenario)?,
        LayoutSource::Proposed => {
            let rec = run_on(
                config,
                &scenario,
                &config.baseline_config()?,
                Scheme::Proposed,
            )?;
            Apv::new(rec.apv)?
        }
    };
    if scenario.kind == ScenarioKind::Multibeam {
        return Ok(apv);
    }
    let model = build_sensitivity(
        apv.positions(),
        &scenario.target0,
        &scenario.users,
        scenario.wavelength(),
    );
    if model.s0().iter().all(|s| s.norm() <= NULL_TOL) {
        return Ok(apv);
    }
    let refine =
        |x: &[f64]| refine_mrt_nulls(x, &scenario.target0, &scenario.users, &scenario.limits);
    let first = refine(apv.positions());
    if first.is_ok() {
        return Ok(first?);
    }
    // When K is close to N the nulls are isolated points that may sit
    // outside the track; restart from random layouts and keep the solution
    // that overruns [0, D_max] the least.
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let d_max = scenario.limits.d_max();
    let overrun = |a: &Apv| {
        let x = a.positions();
        (-x[0]).max(0.0) + (x[x.len() - 1] - d_max).max(0.0)
    };
    let best = (0..NULL_RESTARTS)
        .filter_map(|_| {
            let x: Vec<f64> = (0..apv.len())
                .map(|_| rng.random_range(0.0..d_max))
                .collect();
            refine(&x).ok()
        })
        .min_by(|a, b| overrun(a).total_cmp(&overrun(b)));
    if let Some(out) = best {
        return Ok(out);
    }
    Ok(first?)
}

/// Random restarts of the null polish before giving up.
const NULL_RESTARTS: usize = 64;

/// Worst-case sum gain at every `robust.epsilon` entry.
pub fn robust(config: &ScenarioConfig) -> Result<RobustStudy> {
    let scenario = config.scenario()?;
    let apv = robust_layout(config)?;
    let lambda = scenario.wavelength();
    let n = scenario.n_antennas as f64;
    let model = build_sensitivity(apv.positions(), &scenario.target0, &scenario.users, lambda);
    let wc_cfg = config.worstcase_config();
    let exact = |dd: &[f64]| -> f64 {
        perturbed_mrt_gains(
            apv.positions(),
            dd,
            &scenario.target0,
            &scenario.users,
            lambda,
        )
        .iter()
        .sum()
    };
    let mut rows = Vec::with_capacity(config.robust.epsilon.len());
    for &ratio in &config.robust.epsilon {
        let eps = ratio * lambda;
        let row = match scenario.kind {
            ScenarioKind::Nulling => {
                let wc = worstcase_nulling(&model, eps, &wc_cfg)?;
                // leakage is |S|²; the unit-norm MRT beam divides it by N
                RobustRow {
                    epsilon_over_lambda: ratio,
                    epsilon: eps,
                    approx_sum_gain: wc.leakage / n,
                    exact_sum_gain: exact(&wc.delta_d),
                    sdr_upper_bound: Some(wc.sdr_upper_bound / n),
                    delta_d: wc.delta_d,
                }
            }
            ScenarioKind::Multibeam => {
                let wc = worstcase_multibeam(&model, eps)?;
                RobustRow {
                    epsilon_over_lambda: ratio,
                    epsilon: eps,
                    approx_sum_gain: wc.approx_sum_gain,
                    exact_sum_gain: exact(&wc.delta_d),
                    sdr_upper_bound: None,
                    delta_d: wc.delta_d,
                }
            }
        };
        rows.push(row);
    }
    Ok(RobustStudy {
        kind: scenario.kind,
        apv: apv.into_inner(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{KindSpec, TargetSpec};

    #[test]
    fn scheme_names_round_trip() {
        for s in [Scheme::Proposed, Scheme::Construct]
            .into_iter()
            .chain(BaselineKind::ALL.map(Scheme::Baseline))
        {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!(
            "PSO".parse::<Scheme>().unwrap(),
            Scheme::Baseline(BaselineKind::Pso)
        );
        assert!("best".parse::<Scheme>().is_err());
    }

    #[test]
    fn empty_user_list_gives_full_mrt_gain() {
        let mut c = ScenarioConfig::default();
        c.users.clear();
        let rec = run_scenario(&c, Scheme::Proposed).unwrap();
        assert!((rec.objective - 6.0).abs() < 1e-9);
        assert_eq!(rec.gains.len(), 1);
    }

    #[test]
    fn record_is_consistent() {
        let c = ScenarioConfig::default();
        let rec = run_scenario(&c, Scheme::Baseline(BaselineKind::Fpa)).unwrap();
        assert_eq!(rec.targets.len(), 4);
        assert_eq!(rec.objective, rec.gains[0]);
        assert_eq!(rec.apv.len(), 6);
        let norm: f64 = rec.weights.iter().map(|w| w.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn construct_nulls_a_single_user() {
        let mut c = ScenarioConfig::default();
        c.users = vec![TargetSpec::new(5.0, 2.21)];
        c.target0 = TargetSpec::new(5.0, 0.93);
        let rec = run_scenario(&c, Scheme::Construct).unwrap();
        assert!((rec.gains[0] - 6.0).abs() < 1e-9);
        assert!(rec.gains[1] < 1e-12);
    }

    #[test]
    fn construct_aligns_a_multibeam_user() {
        let mut c = ScenarioConfig::default();
        c.scenario = KindSpec::Multibeam;
        c.target0 = TargetSpec::new(8.94, 2.03);
        c.users = vec![TargetSpec::new(7.61, 1.16)];
        let rec = run_scenario(&c, Scheme::Construct).unwrap();
        assert!(rec.gains.iter().all(|g| (g - 6.0).abs() < 1e-9));
    }

    #[test]
    fn robust_zero_error_is_nominal() {
        let mut c = ScenarioConfig::default();
        c.target0 = TargetSpec::new(5.0, 0.93);
        c.users = vec![TargetSpec::new(5.0, 2.21)];
        c.robust.layout = LayoutSource::Construct;
        c.robust.epsilon = vec![0.0, 0.05];
        let study = robust(&c).unwrap();
        assert_eq!(study.rows[0].approx_sum_gain, 0.0);
        assert!(study.rows[0].exact_sum_gain < 1e-20);
        let r = &study.rows[1];
        assert!(r.sdr_upper_bound.unwrap() >= r.approx_sum_gain);
        assert!(r.gap_db() < 1.0);
    }

    #[test]
    fn robust_default_nulling_restarts_the_polish() {
        let mut c = ScenarioConfig::default();
        c.robust.epsilon = vec![0.0];
        let study = robust(&c).unwrap();
        assert_eq!(study.rows[0].approx_sum_gain, 0.0);
        assert!(study.rows[0].exact_sum_gain < 1e-12);
        let lim = c.limits().unwrap();
        assert!(lim.spacing_ok(&study.apv));
    }

    #[test]
    fn robust_multibeam_needs_full_gain() {
        let mut c = ScenarioConfig::default();
        c.scenario = KindSpec::Multibeam;
        c.target0 = TargetSpec::new(8.94, 2.03);
        c.users = vec![TargetSpec::new(7.61, 1.16)];
        c.robust.layout = LayoutSource::Construct;
        let study = robust(&c).unwrap();
        for r in &study.rows {
            assert!(r.approx_sum_gain <= 6.0);
            assert!(r.sdr_upper_bound.is_none());
        }
    }
}
