//! Monte Carlo over random user drops.
//!
//! Trial `t` draws its users from ChaCha8 stream `t` under the configured
//! seed, so results do not depend on thread scheduling or trial order. Every
//! scheme sees the same drop.

use std::f64::consts::PI;

use mabeam::{Error, PolarTarget, Scenario};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::run::{run_on, Scheme};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropDistribution {
    pub trials: usize,
    /// Users dropped next to the target.
    pub users: usize,
    /// Meters, `[min, max)`.
    pub distance: [f64; 2],
    /// Radians, `[min, max)` within `[0, π]`.
    pub angle: [f64; 2],
    pub max_redraws: usize,
}

impl Default for DropDistribution {
    fn default() -> Self {
        Self {
            trials: 100,
            users: 3,
            distance: [3.0, 9.7],
            angle: [0.0, PI],
            max_redraws: 100,
        }
    }
}

impl DropDistribution {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return bad("montecarlo.trials must be at least 1".into());
        }
        let [r0, r1] = self.distance;
        if !(r0.is_finite() && r1.is_finite() && 0.0 < r0 && r0 <= r1) {
            return bad(format!(
                "montecarlo.distance {:?} is not a positive range",
                self.distance
            ));
        }
        let [a0, a1] = self.angle;
        if !(0.0 <= a0 && a0 <= a1 && a1 <= PI) {
            return bad(format!(
                "montecarlo.angle {:?} is not a range within [0, pi]",
                self.angle
            ));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Result<PolarTarget> {
        let r = uniform(rng, self.distance);
        let a = uniform(rng, self.angle);
        Ok(PolarTarget::new(r, a)?)
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Degenerate drops discarded before this one.
    pub redraws: usize,
    pub target0: PolarTarget,
    pub users: Vec<PolarTarget>,
    /// One objective per scheme, in table order.
    pub objectives: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSummary {
    pub scheme: Scheme,
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloTable {
    pub schemes: Vec<Scheme>,
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<SchemeSummary>,
}

impl MonteCarloTable {
    pub fn summary_for(&self, scheme: Scheme) -> Option<&SchemeSummary> {
        self.summary.iter().find(|s| s.scheme == scheme)
    }

    pub fn redraws(&self) -> usize {
        self.trials.iter().map(|t| t.redraws).sum()
    }
}

fn degenerate(e: &HarnessError) -> bool {
    matches!(
        e,
        HarnessError::Core(Error::DegenerateDirection { .. } | Error::RankDeficient { .. })
    )
}

/// Runs every scheme on `dist.trials` drops.
pub fn monte_carlo(
    config: &ScenarioConfig,
    dist: &DropDistribution,
    schemes: &[Scheme],
) -> Result<MonteCarloTable> {
    dist.validate()?;
    if schemes.is_empty() {
        return Err(HarnessError::Config("no schemes to compare".into()));
    }
    let limits = config.limits()?;
    let knobs = config.baseline_config()?;
    knobs.grid.validate(config.n_antennas)?;

    let trials = (0..dist.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            let mut knobs = knobs;
            knobs.swarm.seed = config.seed.wrapping_add(trial as u64);
            let mut redraws = 0;
            loop {
                let target0 = dist.draw(&mut rng)?;
                let users = (0..dist.users)
                    .map(|_| dist.draw(&mut rng))
                    .collect::<Result<Vec<_>>>()?;
                let scenario =
                    Scenario::new(limits, config.n_antennas, target0, users, config.kind())?;
                let outcome: Result<Vec<f64>> = schemes
                    .iter()
                    .map(|&s| run_on(config, &scenario, &knobs, s).map(|r| r.objective))
                    .collect();
                match outcome {
                    Ok(objectives) => {
                        return Ok(TrialRecord {
                            trial,
                            redraws,
                            target0,
                            users: scenario.users,
                            objectives,
                        })
                    }
                    Err(e) if degenerate(&e) => {
                        redraws += 1;
                        if redraws > dist.max_redraws {
                            return Err(HarnessError::TooManyRedraws { trial, redraws });
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = schemes
        .iter()
        .enumerate()
        .map(|(i, &scheme)| {
            let values: Vec<f64> = trials.iter().map(|t| t.objectives[i]).collect();
            let (mean, std_err) = mean_and_stderr(&values);
            SchemeSummary {
                scheme,
                mean,
                std_err,
                trials: values.len(),
            }
        })
        .collect();
    Ok(MonteCarloTable {
        schemes: schemes.to_vec(),
        trials,
        summary,
    })
}

/// Sample mean and its standard error; the error is 0 for a single value.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
