//! Max-min multi-beam forming by alternating optimization.
//!
//! Weights are improved by successive convex approximation: each gain
//! `|a_k^H w|²` is replaced by its tangent plane at the current point `w_t`,
//! a global minorant, and the resulting max-min problem over the unit ball is
//! solved exactly through its dual on the simplex. Positions are then updated
//! with the same sequential grid search as the nulling solver, holding the
//! weights fixed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{
    gain, inner, steering_entry, steering_vector, Apv, BeamWeights, DistanceModel, PolarTarget,
};
use crate::nulling_opt::GridSearchConfig;
use crate::scenario::Scenario;
use crate::search::{sequential_update, sort_permutation, SamplingGrid, SequentialObjective};

/// AO stops once an iteration gains less than this.
pub const AO_TOL: f64 = 1e-5;

/// Default cap on alternating iterations.
pub const AO_MAX_ITERS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaConfig {
    pub tol_delta: f64,
    pub max_iters: usize,
    /// Primal-dual gap accepted from the inner convex solve.
    pub inner_kkt_tol: f64,
}

impl Default for ScaConfig {
    fn default() -> Self {
        Self {
            tol_delta: 1e-6,
            max_iters: 50,
            inner_kkt_tol: 1e-10,
        }
    }
}

/// `2·Re{(w_t^H a)(a^H w)} − |w_t^H a|²` for a precomputed steering vector.
pub fn surrogate_from_vector(w: &[Complex64], w_t: &[Complex64], a: &[Complex64]) -> f64 {
    let at = inner(w_t, a);
    let aw = inner(a, w);
    2.0 * (at * aw).re - at.norm_sqr()
}

/// Tangent-plane minorant of the beam gain at `w_t`, evaluated at `w`.
pub fn surrogate_gain(
    w: &[Complex64],
    w_t: &[Complex64],
    positions: &[f64],
    target: &PolarTarget,
    wavelength: f64,
    model: DistanceModel,
) -> f64 {
    surrogate_from_vector(
        w,
        w_t,
        &steering_vector(positions, target, wavelength, model),
    )
}

#[derive(Debug, Clone)]
pub struct ScaOutcome {
    pub weights: BeamWeights,
    /// `min_k G(w)` at the returned weights.
    pub delta: f64,
    /// `min_k G` at the start and after each accepted iteration.
    pub trace: Vec<f64>,
}

fn min_gain(w: &[Complex64], steering: &[Vec<Complex64>]) -> f64 {
    steering
        .iter()
        .map(|a| gain(w, a))
        .fold(f64::INFINITY, f64::min)
}

pub fn solve_beamforming_subproblem(
    positions: &[f64],
    targets: &[PolarTarget],
    w_init: &BeamWeights,
    cfg: &ScaConfig,
    wavelength: f64,
    model: DistanceModel,
) -> Result<ScaOutcome> {
    let steering: Vec<Vec<Complex64>> = targets
        .iter()
        .map(|t| steering_vector(positions, t, wavelength, model))
        .collect();
    sca_from_vectors(&steering, w_init, cfg)
}

/// SCA loop on precomputed steering vectors.
pub fn sca_from_vectors(
    steering: &[Vec<Complex64>],
    w_init: &BeamWeights,
    cfg: &ScaConfig,
) -> Result<ScaOutcome> {
    if steering.is_empty() {
        return Err(Error::InvalidInput("need at least one user".into()));
    }
    let mut w = w_init.as_slice().to_vec();
    let mut delta = min_gain(&w, steering);
    let mut trace = vec![delta];
    for _ in 0..cfg.max_iters {
        let (h, c): (Vec<Vec<Complex64>>, Vec<f64>) = steering
            .iter()
            .map(|a| {
                let at = inner(a, &w);
                (a.iter().map(|z| z * at).collect(), at.norm_sqr())
            })
            .unzip();
        let w_new = max_min_affine(&h, &c, cfg.inner_kkt_tol)?;
        let delta_new = min_gain(&w_new, steering);
        if delta_new < delta {
            break;
        }
        w = w_new;
        trace.push(delta_new);
        let improvement = delta_new - delta;
        delta = delta_new;
        if improvement < cfg.tol_delta {
            break;
        }
    }
    Ok(ScaOutcome {
        weights: BeamWeights::normalized(w),
        delta,
        trace,
    })
}

/// `max_{‖w‖≤1} min_k 2Re(h_k^H w) − c_k`.
///
/// Solved through the dual `min_{μ∈Δ} 2‖Σ μ_k h_k‖ − Σ μ_k c_k` with a
/// log-barrier Newton method; the primal point is `w = v/‖v‖`, `v = Σ μ_k h_k`.
/// Termination is on the explicit gap between the dual value and the primal
/// objective at the recovered `w`.
pub(crate) fn max_min_affine(h: &[Vec<Complex64>], c: &[f64], tol: f64) -> Result<Vec<Complex64>> {
    let m = h.len();
    let n = h[0].len();
    let b = DMatrix::from_fn(m, m, |i, j| inner(&h[i], &h[j]).re);
    let c = DVector::from_column_slice(c);
    let scale = b.diagonal().max().sqrt().max(c.amax()).max(1e-300);
    let tau2 = (1e-14 * scale).powi(2);

    let recover = |mu: &DVector<f64>| -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for (k, hk) in h.iter().enumerate() {
            for (vi, hi) in v.iter_mut().zip(hk) {
                *vi += hi * mu[k];
            }
        }
        BeamWeights::normalized(v).into_inner()
    };
    let primal = |w: &[Complex64]| -> f64 {
        h.iter()
            .zip(c.iter())
            .map(|(hk, ck)| 2.0 * inner(hk, w).re - ck)
            .fold(f64::INFINITY, f64::min)
    };
    let dual = |mu: &DVector<f64>| 2.0 * mu.dot(&(&b * mu)).max(0.0).sqrt() - c.dot(mu);

    let mut mu = DVector::from_element(m, 1.0 / m as f64);
    if m == 1 {
        return Ok(recover(&mu));
    }
    let mut t = 1.0 / scale;
    for _ in 0..80 {
        center(&b, &c, tau2, t, &mut mu);
        let w = recover(&mu);
        if dual(&mu) - primal(&w) <= tol {
            return Ok(w);
        }
        t *= 8.0;
    }
    let w = recover(&mu);
    let gap = dual(&mu) - primal(&w);
    Err(Error::SolverFailure(format!(
        "max-min beamforming subproblem stalled at gap {gap:.3e} (tolerance {tol:.1e})"
    )))
}

/// Newton centering of `t·f(μ) − Σ log μ_k` on the simplex.
fn center(b: &DMatrix<f64>, c: &DVector<f64>, tau2: f64, t: f64, mu: &mut DVector<f64>) {
    let m = mu.len();
    let barrier = |mu: &DVector<f64>| -> f64 {
        let s = (mu.dot(&(b * mu)) + tau2).sqrt();
        t * (2.0 * s - c.dot(mu)) - mu.iter().map(|x| x.ln()).sum::<f64>()
    };
    for _ in 0..100 {
        let bmu = b * &*mu;
        let s = (mu.dot(&bmu) + tau2).sqrt();
        let grad = DVector::from_fn(m, |i, _| t * (2.0 * bmu[i] / s - c[i]) - 1.0 / mu[i]);
        let mut hess = (b * (2.0 / s) - &bmu * bmu.transpose() * (2.0 / (s * s * s))) * t;
        for i in 0..m {
            hess[(i, i)] += 1.0 / (mu[i] * mu[i]);
        }
        // null-space step on {1ᵀΔ = 0}, pivoting on the largest weight so the
        // barrier's large diagonal terms stay on the reduced diagonal
        let j = mu.imax();
        let others: Vec<usize> = (0..m).filter(|&i| i != j).collect();
        let reduced = DMatrix::from_fn(m - 1, m - 1, |r, q| {
            let (i, l) = (others[r], others[q]);
            hess[(i, l)] - hess[(i, j)] - hess[(j, l)] + hess[(j, j)]
        });
        let rhs = DVector::from_fn(m - 1, |r, _| -(grad[others[r]] - grad[j]));
        let Some(chol) = reduced.cholesky() else {
            return;
        };
        let p = chol.solve(&rhs);
        let mut step = DVector::zeros(m);
        for (r, &i) in others.iter().enumerate() {
            step[i] = p[r];
        }
        step[j] = -p.sum();
        let decrement = -grad.dot(&step);
        if decrement / 2.0 <= 1e-14 {
            return;
        }
        let mut alpha: f64 = 1.0;
        for i in 0..m {
            if step[i] < 0.0 {
                alpha = alpha.min(-0.99 * mu[i] / step[i]);
            }
        }
        if decrement < 0.25 {
            // quadratic-convergence region: barrier values are too large
            // for a reliable Armijo test, take the step as is
            *mu += &step * alpha;
            continue;
        }
        let f0 = barrier(mu);
        loop {
            let trial = &*mu + &step * alpha;
            if barrier(&trial) <= f0 - 0.25 * alpha * decrement {
                *mu = trial;
                break;
            }
            alpha *= 0.5;
            if alpha < 1e-14 {
                return;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultibeamSolution {
    pub apv: Apv,
    pub weights: BeamWeights,
    /// `min_k G` over the target and every user.
    pub delta: f64,
    /// `δ` at the start and after each AO iteration.
    pub trace: Vec<f64>,
    /// Gains in `scenario.all_targets()` order.
    pub gains: Vec<f64>,
}

/// Normalized sum of the steering vectors.
pub fn equal_gain_start(steering: &[Vec<Complex64>]) -> BeamWeights {
    let n = steering[0].len();
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for a in steering {
        v.iter_mut().zip(a).for_each(|(vi, ai)| *vi += ai);
    }
    if v.iter().all(|z| z.norm() < 1e-12) {
        return BeamWeights::normalized(steering[0].clone());
    }
    BeamWeights::normalized(v)
}

pub fn solve_p3(
    scenario: &Scenario,
    grid: &GridSearchConfig,
    cfg: &ScaConfig,
    ao_max_iters: usize,
) -> Result<MultibeamSolution> {
    grid.validate(scenario.n_antennas)?;
    solve_p3_on_grid(
        scenario,
        &grid.grid(&scenario.limits),
        grid.rounds,
        cfg,
        ao_max_iters,
    )
}

/// Same as [`solve_p3`] on an arbitrary sampling grid.
pub fn solve_p3_on_grid(
    scenario: &Scenario,
    grid: &SamplingGrid,
    rounds: usize,
    cfg: &ScaConfig,
    ao_max_iters: usize,
) -> Result<MultibeamSolution> {
    let targets = scenario.all_targets();
    let lambda = scenario.wavelength();
    let mut objective = MinGainObjective::new(scenario, grid);
    let mut idx = grid.uniform_start(scenario.n_antennas, &scenario.limits)?;

    let steer_at = |idx: &[usize]| -> Vec<Vec<Complex64>> {
        let xs = grid.coords(idx);
        targets
            .iter()
            .map(|t| steering_vector(&xs, t, lambda, scenario.model))
            .collect()
    };
    let steering = steer_at(&idx);
    let mut w = equal_gain_start(&steering);
    let mut delta = min_gain(&w, &steering);
    let mut trace = vec![delta];

    for _ in 0..ao_max_iters {
        let sca = sca_from_vectors(&steer_at(&idx), &w, cfg)?;
        w = sca.weights;
        objective.weights = w.as_slice().to_vec();
        let out = sequential_update(grid, idx.clone(), &scenario.limits, rounds, &mut objective)?;
        idx = out.idx;
        let next = min_gain(&w, &steer_at(&idx));
        trace.push(next);
        let improvement = next - delta;
        delta = next;
        if improvement < AO_TOL {
            break;
        }
    }

    let coords = grid.coords(&idx);
    let perm = sort_permutation(&coords);
    let apv = Apv::new(perm.iter().map(|&i| coords[i]).collect())?;
    let weights = w.permuted(&perm);
    let gains: Vec<f64> = targets
        .iter()
        .map(|t| gain(&weights, &steering_vector(&apv, t, lambda, scenario.model)))
        .collect();
    Ok(MultibeamSolution {
        apv,
        weights,
        delta: gains.iter().copied().fold(f64::INFINITY, f64::min),
        trace,
        gains,
    })
}

/// `min_k |w^H a_k(x)|²` with `w` fixed, over grid moves of one antenna.
pub(crate) struct MinGainObjective {
    users: usize,
    table: Vec<Complex64>,
    pub(crate) weights: Vec<Complex64>,
    n: usize,
    rest: Vec<Complex64>,
}

impl MinGainObjective {
    pub(crate) fn new(scenario: &Scenario, grid: &SamplingGrid) -> Self {
        let targets = scenario.all_targets();
        let lambda = scenario.wavelength();
        let table = grid
            .points()
            .iter()
            .flat_map(|&x| {
                targets
                    .iter()
                    .map(move |t| steering_entry(x, t, lambda, scenario.model))
            })
            .collect();
        Self {
            users: targets.len(),
            table,
            weights: vec![Complex64::new(0.0, 0.0); scenario.n_antennas],
            n: 0,
            rest: vec![Complex64::new(0.0, 0.0); targets.len()],
        }
    }

    fn row(&self, s: usize) -> &[Complex64] {
        &self.table[s * self.users..(s + 1) * self.users]
    }
}

impl SequentialObjective for MinGainObjective {
    fn value(&self, idx: &[usize]) -> f64 {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.users];
        for (m, &s) in idx.iter().enumerate() {
            let wc = self.weights[m].conj();
            acc.iter_mut()
                .zip(self.row(s))
                .for_each(|(a, e)| *a += wc * e);
        }
        acc.iter()
            .map(|z| z.norm_sqr())
            .fold(f64::INFINITY, f64::min)
    }

    fn prepare(&mut self, idx: &[usize], n: usize) {
        let mut acc = vec![Complex64::new(0.0, 0.0); self.users];
        for (m, &s) in idx.iter().enumerate() {
            if m != n {
                let wc = self.weights[m].conj();
                acc.iter_mut()
                    .zip(self.row(s))
                    .for_each(|(a, e)| *a += wc * e);
            }
        }
        self.rest = acc;
        self.n = n;
    }

    fn candidate(&self, s: usize) -> f64 {
        let wc = self.weights[self.n].conj();
        self.rest
            .iter()
            .zip(self.row(s))
            .map(|(r, e)| (r + wc * e).norm_sqr())
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayLimits;
    use crate::scenario::ScenarioKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn t(r: f64, th: f64) -> PolarTarget {
        PolarTarget::new(r, th).unwrap()
    }

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let scale: f64 = rng.random_range(0.0..1.0);
        BeamWeights::normalized(v)
            .iter()
            .map(|z| z * scale)
            .collect()
    }

    #[test]
    fn surrogate_examples() {
        let xs = [0.0, 0.05, 0.13, 0.2, 0.31, 0.45];
        let target = t(5.0, 1.2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let w_t = random_unit(&mut rng, 6);
        let g = crate::geometry::beam_gain(&xs, &w_t, &target, 0.06, DistanceModel::Approx);
        let at_self = surrogate_gain(&w_t, &w_t, &xs, &target, 0.06, DistanceModel::Approx);
        assert!((at_self - g).abs() < 1e-12);
        let zero = vec![Complex64::new(0.0, 0.0); 6];
        let at_zero = surrogate_gain(&zero, &w_t, &xs, &target, 0.06, DistanceModel::Approx);
        assert!((at_zero + g).abs() < 1e-12);
    }

    #[test]
    fn surrogate_is_a_global_minorant() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let xs: Vec<f64> = (0..6)
                .map(|i| 0.1 * i as f64 + rng.random_range(0.0..0.05))
                .collect();
            let target = t(rng.random_range(3.0..9.7), rng.random_range(0.0..PI));
            let a = steering_vector(&xs, &target, 0.06, DistanceModel::Approx);
            let w = random_unit(&mut rng, 6);
            let w_t = random_unit(&mut rng, 6);
            assert!(surrogate_from_vector(&w, &w_t, &a) <= gain(&w, &a) + 1e-12);
        }
    }

    #[test]
    fn single_user_converges_to_mrt() {
        let xs = [0.0, 0.07, 0.15, 0.22, 0.36, 0.5];
        let target = t(6.0, 0.8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w0 = BeamWeights::new(random_unit(&mut rng, 6)).unwrap();
        let out = solve_beamforming_subproblem(
            &xs,
            &[target],
            &w0,
            &ScaConfig::default(),
            0.06,
            DistanceModel::Approx,
        )
        .unwrap();
        assert!((out.delta - 6.0).abs() < 1e-6);
    }

    #[test]
    fn orthogonal_pair_splits_power() {
        // rows of a unitary DFT scaled to norm² = N are orthogonal
        let n = 4;
        let dft = |k: usize| -> Vec<Complex64> {
            (0..n)
                .map(|i| Complex64::from_polar(1.0, 2.0 * PI * (i * k) as f64 / n as f64))
                .collect()
        };
        let steering = vec![dft(0), dft(1)];
        let w0 = equal_gain_start(&steering);
        let out = sca_from_vectors(&steering, &w0, &ScaConfig::default()).unwrap();
        // oracle: grid over w = cos(φ)·a0/√N + e^{jψ}sin(φ)·a1/√N
        let mut best = 0.0f64;
        for i in 0..=200 {
            let phi = PI / 2.0 * i as f64 / 200.0;
            for j in 0..16 {
                let psi = 2.0 * PI * j as f64 / 16.0;
                let w: Vec<Complex64> = (0..n)
                    .map(|m| {
                        (steering[0][m] * phi.cos()
                            + steering[1][m] * Complex64::from_polar(phi.sin(), psi))
                            / (n as f64).sqrt()
                    })
                    .collect();
                best = best.max(min_gain(&w, &steering));
            }
        }
        assert!((best - n as f64 / 2.0).abs() < 1e-3);
        assert!((out.delta - n as f64 / 2.0).abs() < 1e-4, "{}", out.delta);
    }

    #[test]
    fn inner_solver_matches_brute_force_on_two_constraints() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let h: Vec<Vec<Complex64>> = (0..2).map(|_| random_unit(&mut rng, 3)).collect();
            let c = vec![rng.random_range(0.0..0.3), rng.random_range(0.0..0.3)];
            let w = max_min_affine(&h, &c, 1e-10).unwrap();
            let val = |w: &[Complex64]| {
                h.iter()
                    .zip(&c)
                    .map(|(hk, ck)| 2.0 * inner(hk, w).re - ck)
                    .fold(f64::INFINITY, f64::min)
            };
            // dual oracle: scan μ on [0, 1]
            let mut dual_best = f64::INFINITY;
            for i in 0..=20000 {
                let m = i as f64 / 20000.0;
                let v: Vec<Complex64> = (0..3).map(|j| h[0][j] * m + h[1][j] * (1.0 - m)).collect();
                let nv = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                dual_best = dual_best.min(2.0 * nv - m * c[0] - (1.0 - m) * c[1]);
            }
            assert!(
                (val(&w) - dual_best).abs() < 1e-6,
                "{} vs {dual_best}",
                val(&w)
            );
        }
    }

    fn multibeam_scenario(users: Vec<PolarTarget>) -> Scenario {
        let limits = ArrayLimits::new(0.54, 0.03, 0.06).unwrap();
        Scenario::new(
            limits,
            6,
            users[0],
            users[1..].to_vec(),
            ScenarioKind::Multibeam,
        )
        .unwrap()
    }

    #[test]
    fn single_user_scenario_reaches_full_gain() {
        let sc = multibeam_scenario(vec![t(5.0, 1.0)]);
        let sol = solve_p3(&sc, &GridSearchConfig::default(), &ScaConfig::default(), 20).unwrap();
        assert!((sol.delta - 6.0).abs() < 1e-6);
    }

    #[test]
    fn ao_trace_monotone_and_feasible() {
        let sc = multibeam_scenario(vec![t(6.1, 2.18), t(6.0, 1.57), t(5.0, 0.93)]);
        let sol = solve_p3(&sc, &GridSearchConfig::default(), &ScaConfig::default(), 20).unwrap();
        assert!(sol.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        assert!(sc.limits.is_feasible(&sol.apv));
        assert!(sol.weights.norm() <= 1.0 + 1e-12);
        assert!(sol.delta >= sol.trace.last().unwrap() - 1e-6);
        assert!(sol.delta <= 6.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn sca_trace_monotone(
            users in proptest::collection::vec((3.0f64..9.7, 0.0f64..PI), 2..4),
            seed in any::<u64>(),
        ) {
            let xs = [0.0, 0.06, 0.14, 0.25, 0.33, 0.5];
            let steering: Vec<Vec<Complex64>> = users
                .iter()
                .map(|&(r, th)| steering_vector(&xs, &t(r, th), 0.06, DistanceModel::Approx))
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w0 = BeamWeights::normalized(random_unit(&mut rng, 6));
            let out = sca_from_vectors(&steering, &w0, &ScaConfig::default()).unwrap();
            prop_assert!(out.trace.windows(2).all(|w| w[1] >= w[0] - 1e-9));
            prop_assert!(min_gain(&out.weights, &steering) >= out.delta - 1e-9);
        }
    }
}
