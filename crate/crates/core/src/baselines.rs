//! Benchmark layouts: fixed, sparse, antenna selection, particle swarm and far-field.
//!
//! Every scheme ends in an `(Apv, BeamWeights)` pair scored by [`evaluate`]
//! under the near-field approximate model, whatever model produced it.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beamforming::zf_weights;
use crate::error::{Error, Result};
use crate::geometry::{gain, steering_vector, Apv, ArrayLimits, BeamWeights, DistanceModel};
use crate::multibeam_opt::{
    equal_gain_start, solve_beamforming_subproblem, solve_p3, solve_p3_on_grid, ScaConfig,
    AO_MAX_ITERS, AO_TOL,
};
use crate::nulling_opt::{solve_p2, solve_p2_on_grid, GridSearchConfig, SamplingGrid};
use crate::scenario::{Scenario, ScenarioKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    /// Compact array centred on the track, spacing `D_min`.
    Fpa,
    /// Equal spacing `D_max/N` from 0.
    Sa,
    /// Best `N` of the `D_min`-pitch positions.
    As,
    Pso,
    /// Proposed search run under planar wavefronts.
    Ff,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [Self::Fpa, Self::Sa, Self::As, Self::Pso, Self::Ff];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fpa => "fpa",
            Self::Sa => "sa",
            Self::As => "as",
            Self::Pso => "pso",
            Self::Ff => "ff",
        }
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown baseline `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwarmConfig {
    pub particles: usize,
    pub iterations: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Initial velocities are uniform in `±init_velocity·D_max`.
    pub init_velocity: f64,
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            particles: 50,
            iterations: 100,
            inertia: 0.729,
            cognitive: 1.494,
            social: 1.494,
            init_velocity: 0.1,
            seed: 0,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(Error::InvalidInput(
                "swarm needs at least one particle".into(),
            ));
        }
        let finite = [
            self.inertia,
            self.cognitive,
            self.social,
            self.init_velocity,
        ];
        if finite.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput(
                "swarm coefficients must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Knobs shared by every scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineConfig {
    pub grid: GridSearchConfig,
    pub sca: ScaConfig,
    pub ao_max_iters: usize,
    pub swarm: SwarmConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            grid: GridSearchConfig::default(),
            sca: ScaConfig::default(),
            ao_max_iters: AO_MAX_ITERS,
            swarm: SwarmConfig::default(),
        }
    }
}

impl BaselineConfig {
    pub fn new(
        grid: GridSearchConfig,
        sca: ScaConfig,
        ao_max_iters: usize,
        swarm: SwarmConfig,
    ) -> Self {
        Self {
            grid,
            sca,
            ao_max_iters,
            swarm,
        }
    }
}

/// Near-field score of one design.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Target gain for nulling, `min_k G` for multi-beam.
    pub objective: f64,
    /// Gains in `scenario.all_targets()` order.
    pub gains: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub kind: BaselineKind,
    pub apv: Apv,
    pub weights: BeamWeights,
    pub evaluation: Evaluation,
}

/// Scores `w` on `apv` with near-field steering vectors.
pub fn evaluate(scenario: &Scenario, apv: &[f64], w: &[Complex64]) -> Evaluation {
    let lambda = scenario.wavelength();
    let gains: Vec<f64> = scenario
        .all_targets()
        .iter()
        .map(|t| gain(w, &steering_vector(apv, t, lambda, DistanceModel::Approx)))
        .collect();
    let objective = match scenario.kind {
        ScenarioKind::Nulling => gains[0],
        ScenarioKind::Multibeam => gains.iter().copied().fold(f64::INFINITY, f64::min),
    };
    Evaluation { objective, gains }
}

fn fixed_layout(limits: &ArrayLimits, n: usize, start: f64, pitch: f64) -> Result<Apv> {
    Apv::new((0..n).map(|i| start + i as f64 * pitch).collect())
        .map_err(|_| Error::Infeasible(format!("cannot place {n} antennas with pitch {pitch}")))
        .and_then(|apv| {
            if limits.is_feasible(&apv) {
                Ok(apv)
            } else {
                Err(Error::Infeasible(format!(
                    "{n} antennas at spacing {} exceed D_max = {}",
                    limits.d_min(),
                    limits.d_max()
                )))
            }
        })
}

/// Layout of the FPA, SA or AS scheme.
pub fn baseline_apv(kind: BaselineKind, scenario: &Scenario, cfg: &BaselineConfig) -> Result<Apv> {
    let limits = &scenario.limits;
    let n = scenario.n_antennas;
    limits.check_count(n)?;
    match kind {
        BaselineKind::Fpa => {
            let span = (n - 1) as f64 * limits.d_min();
            fixed_layout(limits, n, (limits.d_max() - span) / 2.0, limits.d_min())
        }
        BaselineKind::Sa => fixed_layout(limits, n, 0.0, limits.d_max() / n as f64),
        BaselineKind::As => {
            let grid = SamplingGrid::with_pitch(limits.d_max(), limits.d_min());
            Ok(match scenario.kind {
                ScenarioKind::Nulling => solve_p2_on_grid(scenario, &grid, cfg.grid.rounds)?.apv,
                ScenarioKind::Multibeam => {
                    solve_p3_on_grid(scenario, &grid, cfg.grid.rounds, &cfg.sca, cfg.ao_max_iters)?
                        .apv
                }
            })
        }
        BaselineKind::Pso | BaselineKind::Ff => Err(Error::InvalidInput(format!(
            "{} is not a fixed layout",
            kind.name()
        ))),
    }
}

/// Beamformer the proposed method would use on a fixed layout.
fn weights_for(scenario: &Scenario, apv: &[f64], cfg: &BaselineConfig) -> Result<BeamWeights> {
    let lambda = scenario.wavelength();
    match scenario.kind {
        ScenarioKind::Nulling => Ok(zf_weights(
            apv,
            &scenario.target0,
            &scenario.users,
            lambda,
            scenario.model,
        )?
        .weights),
        ScenarioKind::Multibeam => {
            let targets = scenario.all_targets();
            let steering: Vec<Vec<Complex64>> = targets
                .iter()
                .map(|t| steering_vector(apv, t, lambda, scenario.model))
                .collect();
            let w0 = equal_gain_start(&steering);
            Ok(
                solve_beamforming_subproblem(apv, &targets, &w0, &cfg.sca, lambda, scenario.model)?
                    .weights,
            )
        }
    }
}

/// Runs one benchmark scheme end to end.
pub fn run_baseline(
    kind: BaselineKind,
    scenario: &Scenario,
    cfg: &BaselineConfig,
) -> Result<BaselineOutcome> {
    let (apv, weights) = match kind {
        BaselineKind::Pso => {
            let sol = pso_solve(scenario, cfg)?;
            (sol.apv, sol.weights)
        }
        BaselineKind::Ff => far_field_solve(scenario, cfg)?,
        _ => {
            let apv = baseline_apv(kind, scenario, cfg)?;
            let w = weights_for(scenario, &apv, cfg)?;
            (apv, w)
        }
    };
    let evaluation = evaluate(scenario, &apv, &weights);
    Ok(BaselineOutcome {
        kind,
        apv,
        weights,
        evaluation,
    })
}

/// The proposed search under planar steering vectors; the caller scores the
/// returned pair with near-field gains.
pub fn far_field_solve(scenario: &Scenario, cfg: &BaselineConfig) -> Result<(Apv, BeamWeights)> {
    let planar = scenario.clone().with_model(DistanceModel::Planar);
    match scenario.kind {
        ScenarioKind::Nulling => {
            let sol = solve_p2(&planar, &cfg.grid)?;
            Ok((sol.apv, sol.zf.weights))
        }
        ScenarioKind::Multibeam => {
            let sol = solve_p3(&planar, &cfg.grid, &cfg.sca, cfg.ao_max_iters)?;
            Ok((sol.apv, sol.weights))
        }
    }
}

/// Sorts, then pushes forward and pulls back so that consecutive antennas
/// are at least `D_min` apart inside `[0, D_max]`.
pub fn repair(x: &mut [f64], limits: &ArrayLimits) {
    x.sort_by(f64::total_cmp);
    let (d_min, d_max) = (limits.d_min(), limits.d_max());
    let n = x.len();
    if n == 0 {
        return;
    }
    x[0] = x[0].max(0.0);
    for i in 1..n {
        x[i] = x[i].max(x[i - 1] + d_min);
    }
    x[n - 1] = x[n - 1].min(d_max);
    for i in (0..n - 1).rev() {
        x[i] = x[i].min(x[i + 1] - d_min);
    }
}

#[derive(Debug, Clone)]
pub struct PsoSolution {
    pub apv: Apv,
    pub weights: BeamWeights,
    pub objective: f64,
}

struct Swarm {
    x: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    best_x: Vec<Vec<f64>>,
    best_f: Vec<f64>,
    global: usize,
}

impl Swarm {
    fn new(
        init: Option<&[f64]>,
        n: usize,
        limits: &ArrayLimits,
        cfg: &SwarmConfig,
        rng: &mut ChaCha8Rng,
        fitness: &mut impl FnMut(&[f64]) -> f64,
    ) -> Self {
        let d_max = limits.d_max();
        let vmax = cfg.init_velocity * d_max;
        let mut x = Vec::with_capacity(cfg.particles);
        let mut v = Vec::with_capacity(cfg.particles);
        for p in 0..cfg.particles {
            let mut xi: Vec<f64> = match init {
                Some(seed) if p == 0 => seed.to_vec(),
                _ => (0..n).map(|_| rng.random_range(0.0..=d_max)).collect(),
            };
            repair(&mut xi, limits);
            x.push(xi);
            v.push(
                (0..n)
                    .map(|_| {
                        if vmax > 0.0 {
                            rng.random_range(-vmax..=vmax)
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            );
        }
        let best_f: Vec<f64> = x.iter().map(|xi| fitness(xi)).collect();
        let global = argmax(&best_f);
        Self {
            best_x: x.clone(),
            x,
            v,
            best_f,
            global,
        }
    }

    fn step(
        &mut self,
        limits: &ArrayLimits,
        cfg: &SwarmConfig,
        rng: &mut ChaCha8Rng,
        fitness: &mut impl FnMut(&[f64]) -> f64,
    ) {
        let d_max = limits.d_max();
        let g = self.best_x[self.global].clone();
        for p in 0..self.x.len() {
            for i in 0..self.x[p].len() {
                let (r1, r2): (f64, f64) = (rng.random(), rng.random());
                let vi = cfg.inertia * self.v[p][i]
                    + cfg.cognitive * r1 * (self.best_x[p][i] - self.x[p][i])
                    + cfg.social * r2 * (g[i] - self.x[p][i]);
                self.v[p][i] = vi.clamp(-d_max, d_max);
                self.x[p][i] += self.v[p][i];
            }
            repair(&mut self.x[p], limits);
            let f = fitness(&self.x[p]);
            if f > self.best_f[p] {
                self.best_f[p] = f;
                self.best_x[p] = self.x[p].clone();
            }
        }
        self.global = argmax(&self.best_f);
    }

    fn best(&self) -> (&[f64], f64) {
        (&self.best_x[self.global], self.best_f[self.global])
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &f) in v.iter().enumerate() {
        if f > v[best] {
            best = i;
        }
    }
    best
}

fn run_swarm(
    init: Option<&[f64]>,
    scenario: &Scenario,
    cfg: &SwarmConfig,
    rng: &mut ChaCha8Rng,
    mut fitness: impl FnMut(&[f64]) -> f64,
) -> (Vec<f64>, f64) {
    let limits = &scenario.limits;
    let mut swarm = Swarm::new(init, scenario.n_antennas, limits, cfg, rng, &mut fitness);
    for _ in 0..cfg.iterations {
        swarm.step(limits, cfg, rng, &mut fitness);
    }
    let (x, f) = swarm.best();
    (x.to_vec(), f)
}

/// Continuous position search by particle swarm.
///
/// Nulling scores each particle by its post-ZF target gain. Multi-beam
/// alternates SCA for the weights with a swarm over positions for fixed
/// weights, mirroring the alternating search with the grid step replaced.
pub fn pso_solve(scenario: &Scenario, cfg: &BaselineConfig) -> Result<PsoSolution> {
    cfg.swarm.validate()?;
    scenario.limits.check_count(scenario.n_antennas)?;
    let lambda = scenario.wavelength();
    let model = scenario.model;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.swarm.seed);
    match scenario.kind {
        ScenarioKind::Nulling => {
            let (x, _) = run_swarm(None, scenario, &cfg.swarm, &mut rng, |x| {
                zf_weights(x, &scenario.target0, &scenario.users, lambda, model)
                    .map_or(f64::NEG_INFINITY, |zf| zf.target_gain)
            });
            let apv = Apv::new(x)?;
            let zf = zf_weights(&apv, &scenario.target0, &scenario.users, lambda, model)?;
            Ok(PsoSolution {
                objective: zf.target_gain,
                apv,
                weights: zf.weights,
            })
        }
        ScenarioKind::Multibeam => {
            let targets = scenario.all_targets();
            let steer = |x: &[f64]| -> Vec<Vec<Complex64>> {
                targets
                    .iter()
                    .map(|t| steering_vector(x, t, lambda, model))
                    .collect()
            };
            let mut init: Option<Vec<f64>> = None;
            let mut x: Vec<f64> = Vec::new();
            let mut w =
                BeamWeights::normalized(vec![Complex64::new(1.0, 0.0); scenario.n_antennas]);
            let mut delta = f64::NEG_INFINITY;
            for it in 0..cfg.ao_max_iters.max(1) {
                let (xs, _) = run_swarm(init.as_deref(), scenario, &cfg.swarm, &mut rng, |x| {
                    if it == 0 {
                        let a = steer(x);
                        min_gain(&equal_gain_start(&a), &a)
                    } else {
                        min_gain(&w, &steer(x))
                    }
                });
                let a = steer(&xs);
                let start = if it == 0 {
                    equal_gain_start(&a)
                } else {
                    w.clone()
                };
                let sca =
                    solve_beamforming_subproblem(&xs, &targets, &start, &cfg.sca, lambda, model)?;
                let improved = sca.delta - delta;
                if sca.delta >= delta {
                    x = xs.clone();
                    w = sca.weights;
                    delta = sca.delta;
                }
                init = Some(x.clone());
                if improved.abs() < AO_TOL {
                    break;
                }
            }
            Ok(PsoSolution {
                apv: Apv::new(x)?,
                weights: w,
                objective: delta,
            })
        }
    }
}

fn min_gain(w: &[Complex64], steering: &[Vec<Complex64>]) -> f64 {
    steering
        .iter()
        .map(|a| gain(w, a))
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PolarTarget;

    const LAMBDA: f64 = 0.06;

    fn t(r: f64, th: f64) -> PolarTarget {
        PolarTarget::new(r, th).unwrap()
    }

    fn scenario(n: usize, kind: ScenarioKind, users: Vec<PolarTarget>) -> Scenario {
        let limits = ArrayLimits::new(9.0 * LAMBDA, LAMBDA / 2.0, LAMBDA).unwrap();
        Scenario::new(limits, n, t(4.72, 1.01), users, kind).unwrap()
    }

    fn small_swarm() -> BaselineConfig {
        BaselineConfig {
            swarm: SwarmConfig {
                particles: 12,
                iterations: 20,
                ..SwarmConfig::default()
            },
            ao_max_iters: 3,
            ..BaselineConfig::default()
        }
    }

    #[test]
    fn fpa_is_centred() {
        let sc = scenario(2, ScenarioKind::Nulling, vec![t(6.32, 1.89)]);
        let apv = baseline_apv(BaselineKind::Fpa, &sc, &BaselineConfig::default()).unwrap();
        assert!((apv[0] - 4.25 * LAMBDA).abs() < 1e-12);
        assert!((apv[1] - 4.75 * LAMBDA).abs() < 1e-12);
    }

    #[test]
    fn sa_spacing() {
        let sc = scenario(6, ScenarioKind::Nulling, vec![t(6.32, 1.89)]);
        let apv = baseline_apv(BaselineKind::Sa, &sc, &BaselineConfig::default()).unwrap();
        for w in apv.windows(2) {
            assert!((w[1] - w[0] - 1.5 * LAMBDA).abs() < 1e-12);
        }
        assert_eq!(apv[0], 0.0);
    }

    #[test]
    fn fixed_layouts_reject_overfull_track() {
        let limits = ArrayLimits::new(0.1, 0.03, LAMBDA).unwrap();
        let sc = Scenario::new(
            limits,
            5,
            t(4.0, 1.0),
            vec![t(5.0, 2.0)],
            ScenarioKind::Nulling,
        );
        assert!(matches!(sc, Err(Error::Infeasible(_))));
        let mut sc = scenario(6, ScenarioKind::Nulling, vec![t(5.0, 2.0)]);
        sc.limits = limits;
        sc.n_antennas = 5;
        assert!(matches!(
            baseline_apv(BaselineKind::Fpa, &sc, &BaselineConfig::default()),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn as_dominates_fpa_when_fpa_is_a_selection() {
        // FPA positions lie on the D_min grid when (D_max − (N−1)D_min)/2 is a multiple of D_min
        let users = vec![t(6.32, 1.89), t(5.0, 1.57)];
        let limits = ArrayLimits::new(8.0 * LAMBDA, LAMBDA / 2.0, LAMBDA).unwrap();
        let sc = Scenario::new(limits, 5, t(4.72, 1.01), users, ScenarioKind::Nulling).unwrap();
        let cfg = BaselineConfig::default();
        let fpa = run_baseline(BaselineKind::Fpa, &sc, &cfg).unwrap();
        let grid = SamplingGrid::with_pitch(limits.d_max(), limits.d_min());
        assert!(fpa
            .apv
            .iter()
            .all(|x| grid.points().iter().any(|g| (g - x).abs() < 1e-12)));
        let sel = run_baseline(BaselineKind::As, &sc, &cfg).unwrap();
        assert!(sel.evaluation.objective >= fpa.evaluation.objective - 1e-9);
    }

    #[test]
    fn repair_restores_feasibility() {
        let limits = ArrayLimits::new(0.54, 0.03, LAMBDA).unwrap();
        let mut x = vec![0.6, -0.1, 0.2, 0.21, 0.2];
        repair(&mut x, &limits);
        assert!(limits.is_feasible(&x), "{x:?}");
    }

    #[test]
    fn single_still_particle_keeps_its_start() {
        let sc = scenario(4, ScenarioKind::Nulling, vec![t(6.32, 1.89)]);
        let swarm = SwarmConfig {
            particles: 1,
            iterations: 5,
            init_velocity: 0.0,
            seed: 9,
            ..SwarmConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d_max = sc.limits.d_max();
        let mut expected: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..=d_max)).collect();
        repair(&mut expected, &sc.limits);
        let cfg = BaselineConfig {
            swarm,
            ..BaselineConfig::default()
        };
        let sol = pso_solve(&sc, &cfg).unwrap();
        assert_eq!(sol.apv.positions(), expected.as_slice());
    }

    #[test]
    fn pso_is_feasible_and_bounded() {
        for kind in [ScenarioKind::Nulling, ScenarioKind::Multibeam] {
            let sc = scenario(6, kind, vec![t(6.32, 1.89), t(5.0, 1.57)]);
            let out = run_baseline(BaselineKind::Pso, &sc, &small_swarm()).unwrap();
            assert!(sc.limits.is_feasible(&out.apv));
            assert!(out.evaluation.objective <= 6.0 + 1e-9);
        }
    }

    #[test]
    fn far_field_matches_near_field_for_distant_users() {
        let limits = ArrayLimits::new(9.0 * LAMBDA, LAMBDA / 2.0, LAMBDA).unwrap();
        let far = 1e5 * limits.d_max();
        let sc = Scenario::new(
            limits,
            6,
            t(far, 1.01),
            vec![t(far, 1.89), t(far, 1.57)],
            ScenarioKind::Nulling,
        )
        .unwrap();
        let cfg = BaselineConfig::default();
        let ff = run_baseline(BaselineKind::Ff, &sc, &cfg).unwrap();
        let nf = solve_p2(&sc, &cfg.grid).unwrap();
        let proposed = evaluate(&sc, &nf.apv, &nf.zf.weights).objective;
        assert!((ff.evaluation.objective - proposed).abs() <= 0.01 * proposed);
    }

    #[test]
    fn far_field_is_scored_with_near_field_gains() {
        let sc = scenario(6, ScenarioKind::Nulling, vec![t(6.32, 1.89), t(5.0, 1.57)]);
        let cfg = BaselineConfig::default();
        let (apv, w) = far_field_solve(&sc, &cfg).unwrap();
        let out = run_baseline(BaselineKind::Ff, &sc, &cfg).unwrap();
        let nf = gain(
            &w,
            &steering_vector(&apv, &sc.target0, LAMBDA, DistanceModel::Approx),
        );
        let pf = gain(
            &w,
            &steering_vector(&apv, &sc.target0, LAMBDA, DistanceModel::Planar),
        );
        assert_eq!(out.evaluation.objective, nf);
        assert!((nf - pf).abs() > 1e-6);
    }

    #[test]
    fn kind_names_round_trip() {
        for k in BaselineKind::ALL {
            assert_eq!(k.name().parse::<BaselineKind>().unwrap(), k);
        }
        assert!("nope".parse::<BaselineKind>().is_err());
    }
}
