//! Worst-case impact of antenna position errors.
//!
//! The transmit beam is MRT toward user 0 at the actual (perturbed) positions.
//! Each distance is linearized in the position error, `r(x + Δ) ≈ r(x) + βΔ`,
//! and `exp(jΔΦ) ≈ 1 + jΔΦ`. On a nulling layout the summed leakage becomes
//! the convex quadratic `Δdᵀ Re(Q) Δd`, maximized over the box `|Δd_n| ≤ ε`
//! through a semidefinite relaxation, Gaussian randomization and, for small
//! arrays, exact vertex enumeration. On a full-gain layout each gain is affine
//! in `Δd` and the worst case is a sign pattern.
//!
//! Leakage values drop the `1/N` factor (`|Σ_n c_{k,n}Δd_n|²`); multi-beam
//! gains keep it (`N + Σ_n η_{k,n}Δd_n`).

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::construct::{phase_coeffs, PhaseCoeffs};
use crate::error::{Error, Result};
use crate::geometry::{
    gain, steering_vector, wavenumber, Apv, ArrayLimits, BeamWeights, DistanceModel, PolarTarget,
};
use crate::sdp::max_trace_unit_diag;

/// `|S_k⁽⁰⁾|` above this means the layout does not null user `k`.
pub const NULL_TOL: f64 = 1e-6;
/// Allowed shortfall of `|S_k⁽⁰⁾|²/N` below `N` on a full-gain layout.
pub const FULL_GAIN_TOL: f64 = 1e-4;
/// Largest array handled by [`vertex_oracle`].
pub const VERTEX_LIMIT: usize = 20;
/// Relative duality gap of the relaxation.
pub const SDR_GAP: f64 = 1e-7;
/// `|D_n|` below this fraction of its magnitude scale counts as zero.
const ZERO_SENSITIVITY: f64 = 1e-9;

/// Per-antenna error bound, optionally with a realized error vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget {
    epsilon: f64,
    delta_d: Option<Vec<f64>>,
}

impl ErrorBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "error bound must be finite and non-negative, got {epsilon}"
            )));
        }
        Ok(Self {
            epsilon,
            delta_d: None,
        })
    }

    pub fn with_errors(epsilon: f64, delta_d: Vec<f64>) -> Result<Self> {
        let budget = Self::new(epsilon)?;
        if let Some((n, d)) = delta_d
            .iter()
            .enumerate()
            .find(|(_, d)| !(d.abs() <= epsilon * (1.0 + 1e-12)))
        {
            return Err(Error::InvalidInput(format!(
                "position error {d} at antenna {n} exceeds the bound {epsilon}"
            )));
        }
        Ok(Self {
            delta_d: Some(delta_d),
            ..budget
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta_d(&self) -> Option<&[f64]> {
        self.delta_d.as_deref()
    }
}

/// First-order sensitivities of the MRT gains to antenna position errors.
#[derive(Debug, Clone)]
pub struct SensitivityModel {
    wavelength: f64,
    beta: DMatrix<f64>,
    phi0: DMatrix<f64>,
    s: DMatrix<Complex64>,
    c: DMatrix<Complex64>,
    eta: DMatrix<f64>,
    d: DVector<f64>,
    s0: Vec<Complex64>,
    d_scale: DVector<f64>,
}

impl SensitivityModel {
    /// Assembles the model from `β` (`K+1 × N`, row 0 is user 0) and `Φ⁰` (`K × N`).
    pub(crate) fn from_parts(beta: DMatrix<f64>, phi0: DMatrix<f64>, wavelength: f64) -> Self {
        let (k_users, n) = phi0.shape();
        let k = wavenumber(wavelength);
        let s = phi0.map(|p| Complex64::from_polar(1.0, p));
        let s0: Vec<Complex64> = (0..k_users).map(|u| s.row(u).iter().sum()).collect();
        let dbeta = |u: usize, i: usize| beta[(0, i)] - beta[(u + 1, i)];
        let c = DMatrix::from_fn(k_users, n, |u, i| s[(u, i)] * (k * dbeta(u, i)));
        let j = Complex64::new(0.0, 1.0);
        let eta = DMatrix::from_fn(k_users, n, |u, i| {
            2.0 / n as f64 * (s0[u].conj() * j * c[(u, i)]).re
        });
        let d = DVector::from_fn(n, |i, _| eta.column(i).sum());
        let d_scale = DVector::from_fn(n, |i, _| {
            (0..k_users)
                .map(|u| 2.0 / n as f64 * s0[u].norm() * k * dbeta(u, i).abs())
                .sum()
        });
        Self {
            wavelength,
            beta,
            phi0,
            s,
            c,
            eta,
            d,
            s0,
            d_scale,
        }
    }

    pub fn n_antennas(&self) -> usize {
        self.beta.ncols()
    }

    pub fn n_users(&self) -> usize {
        self.phi0.nrows()
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// `β_{k,n}`, with user 0 in row 0.
    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    /// `Φ⁰_{k,n} = (2π/λ)(r⁰_{0,n} − r⁰_{k,n})`.
    pub fn phi0(&self) -> &DMatrix<f64> {
        &self.phi0
    }

    pub fn s(&self) -> &DMatrix<Complex64> {
        &self.s
    }

    /// `c_{k,n} = (2π/λ) s_{k,n} (β_{0,n} − β_{k,n})`.
    pub fn c(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    /// Slope of user `k`'s gain in `Δd_n`: `(2/N)·Re{conj(S_k⁽⁰⁾)·j·c_{k,n}}`.
    pub fn eta(&self) -> &DMatrix<f64> {
        &self.eta
    }

    /// `D_n = Σ_k η_{k,n}`.
    pub fn d(&self) -> &DVector<f64> {
        &self.d
    }

    /// `S_k⁽⁰⁾ = Σ_n s_{k,n}`.
    pub fn s0(&self) -> &[Complex64] {
        &self.s0
    }

    /// `S_k⁽¹⁾ = j Σ_n s_{k,n} ΔΦ_{k,n}` for one error vector.
    pub fn s1(&self, delta_d: &[f64]) -> Vec<Complex64> {
        let j = Complex64::new(0.0, 1.0);
        (0..self.n_users())
            .map(|u| {
                j * self
                    .c
                    .row(u)
                    .iter()
                    .zip(delta_d)
                    .map(|(c, d)| c * d)
                    .sum::<Complex64>()
            })
            .collect()
    }

    /// `sign(D_n)` with `+1` when `D_n` is zero relative to its magnitude scale.
    pub fn error_sign(&self, n: usize) -> f64 {
        if self.d[n].abs() <= ZERO_SENSITIVITY * self.d_scale[n] {
            1.0
        } else {
            self.d[n].signum()
        }
    }
}

pub fn build_sensitivity(
    positions: &[f64],
    target0: &PolarTarget,
    users: &[PolarTarget],
    wavelength: f64,
) -> SensitivityModel {
    let n = positions.len();
    let all: Vec<&PolarTarget> = std::iter::once(target0).chain(users).collect();
    let beta = DMatrix::from_fn(all.len(), n, |u, i| {
        let (r, th) = (all[u].distance(), all[u].angle());
        -th.cos() + positions[i] * th.sin().powi(2) / r
    });
    let k = wavenumber(wavelength);
    let model = DistanceModel::Approx;
    let phi0 = DMatrix::from_fn(users.len(), n, |u, i| {
        let x = positions[i];
        let user = &users[u];
        // offsets first so the large ranges only enter once
        k * (model.path_difference(target0, x) - model.path_difference(user, x))
            + k * (target0.distance() - user.distance())
    });
    SensitivityModel::from_parts(beta, phi0, wavelength)
}

/// `Q = Σ_k c_k c_k^H`.
pub fn q_matrix(model: &SensitivityModel) -> DMatrix<Complex64> {
    let c = model.c();
    let n = model.n_antennas();
    DMatrix::from_fn(n, n, |a, b| {
        (0..model.n_users())
            .map(|u| c[(u, a)] * c[(u, b)].conj())
            .sum()
    })
}

fn leakage_value(model: &SensitivityModel, delta_d: &[f64]) -> f64 {
    (0..model.n_users())
        .map(|u| {
            model
                .c()
                .row(u)
                .iter()
                .zip(delta_d)
                .map(|(c, d)| c * d)
                .sum::<Complex64>()
                .norm_sqr()
        })
        .sum()
}

/// `Σ_k |Σ_n c_{k,n}Δd_n|²`, the first-order leakage of a nulling layout.
pub fn nulling_leakage_gain(model: &SensitivityModel, delta_d: &[f64]) -> Result<f64> {
    check_len(model, delta_d)?;
    if let Some((user, s)) = model
        .s0()
        .iter()
        .enumerate()
        .find(|(_, s)| s.norm() > NULL_TOL)
    {
        return Err(Error::NotNulled {
            user,
            residual: s.norm(),
        });
    }
    Ok(leakage_value(model, delta_d))
}

fn check_len(model: &SensitivityModel, delta_d: &[f64]) -> Result<()> {
    if delta_d.len() != model.n_antennas() {
        return Err(Error::InvalidInput(format!(
            "{} position errors for {} antennas",
            delta_d.len(),
            model.n_antennas()
        )));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    ErrorBudget::new(epsilon).map(|_| ())
}

fn real_q(model: &SensitivityModel) -> DMatrix<f64> {
    q_matrix(model).map(|z| z.re)
}

fn snap(v: impl Iterator<Item = f64>, epsilon: f64) -> Vec<f64> {
    v.map(|x| if x < 0.0 { -epsilon } else { epsilon })
        .collect()
}

fn quad(r: &DMatrix<f64>, d: &[f64]) -> f64 {
    let d = DVector::from_column_slice(d);
    d.dot(&(r * &d))
}

/// Exact maximizer of the leakage over the vertices `{±ε}^N`.
///
/// `Δd` and `−Δd` give the same value, so the first antenna's sign is fixed
/// and the remaining `2^(N−1)` patterns are walked in Gray-code order.
pub fn vertex_oracle(model: &SensitivityModel, epsilon: f64) -> Result<(Vec<f64>, f64)> {
    check_epsilon(epsilon)?;
    let n = model.n_antennas();
    if n > VERTEX_LIMIT {
        return Err(Error::TooLarge {
            n,
            max: VERTEX_LIMIT,
        });
    }
    let r = real_q(model);
    let mut signs = vec![1.0; n];
    let mut u: Vec<f64> = (0..n).map(|i| r.row(i).sum()).collect();
    let mut value: f64 = u.iter().sum();
    let mut best = (value, signs.clone());
    for step in 1u64..(1u64 << (n - 1)) {
        let b = step.trailing_zeros() as usize + 1;
        let delta = -2.0 * signs[b];
        value += 2.0 * delta * u[b] + delta * delta * r[(b, b)];
        for (i, ui) in u.iter_mut().enumerate() {
            *ui += delta * r[(i, b)];
        }
        signs[b] = -signs[b];
        if value > best.0 {
            best = (value, signs.clone());
        }
    }
    let delta_d: Vec<f64> = best.1.iter().map(|s| s * epsilon).collect();
    let leakage = leakage_value(model, &delta_d);
    Ok((delta_d, leakage))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstCaseConfig {
    /// Gaussian randomization draws.
    pub draws: usize,
    pub seed: u64,
    /// Exact vertex pass for arrays up to this size.
    pub vertex_refine_limit: usize,
}

impl Default for WorstCaseConfig {
    fn default() -> Self {
        Self {
            draws: 1000,
            seed: 0,
            vertex_refine_limit: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NullingWorstCase {
    pub delta_d: Vec<f64>,
    pub leakage: f64,
    /// `ε²` times the relaxation's dual value.
    pub sdr_upper_bound: f64,
    /// Best leakage from the eigenvector and the randomization draws.
    pub randomized_leakage: f64,
    /// Leakage of the snapped principal eigenvector of `X*`.
    pub eigen_leakage: f64,
    /// `X*` has one dominant eigenvalue.
    pub rank_one: bool,
    /// The vertex pass ran, so `leakage` is the exact box maximum.
    pub exact: bool,
}

/// Worst-case leakage of a nulling layout under `|Δd_n| ≤ ε`.
pub fn worstcase_nulling(
    model: &SensitivityModel,
    epsilon: f64,
    cfg: &WorstCaseConfig,
) -> Result<NullingWorstCase> {
    check_epsilon(epsilon)?;
    let n = model.n_antennas();
    if epsilon == 0.0 {
        return Ok(NullingWorstCase {
            delta_d: vec![0.0; n],
            leakage: 0.0,
            sdr_upper_bound: 0.0,
            randomized_leakage: 0.0,
            eigen_leakage: 0.0,
            rank_one: true,
            exact: true,
        });
    }
    let r = real_q(model);
    let sdr = max_trace_unit_diag(&r, SDR_GAP)?;
    let eig = SymmetricEigen::new(sdr.x.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lead = eig.eigenvalues[order[0]];
    let rank_one = n == 1 || eig.eigenvalues[order[1]] <= 1e-6 * lead;

    let principal = snap(eig.eigenvectors.column(order[0]).iter().copied(), epsilon);
    let eigen_leakage = leakage_value(model, &principal);
    let mut best = (quad(&r, &principal), principal);

    let root: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.draws {
        let z: Vec<f64> = (0..n)
            .map(|i| {
                let z: f64 = StandardNormal.sample(&mut rng);
                root[i] * z
            })
            .collect();
        let v = &eig.eigenvectors * DVector::from_vec(z);
        let cand = snap(v.iter().copied(), epsilon);
        let value = quad(&r, &cand);
        if value > best.0 {
            best = (value, cand);
        }
    }
    let randomized_leakage = leakage_value(model, &best.1);

    let (delta_d, leakage, exact) = if n <= cfg.vertex_refine_limit.min(VERTEX_LIMIT) {
        let (d, l) = vertex_oracle(model, epsilon)?;
        (d, l, true)
    } else {
        (best.1, randomized_leakage, false)
    };
    Ok(NullingWorstCase {
        delta_d,
        leakage,
        sdr_upper_bound: epsilon * epsilon * sdr.upper,
        randomized_leakage,
        eigen_leakage,
        rank_one,
        exact,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultibeamWorstCase {
    pub delta_d: Vec<f64>,
    /// `KN − ε Σ_n |D_n|`.
    pub approx_sum_gain: f64,
    /// `N − ε Σ_n η_{k,n} sign(D_n)` for each user `k ≥ 1`.
    pub per_user_gains: Vec<f64>,
}

/// Closed-form worst case of a full-gain layout: `Δd_n = −ε·sign(D_n)`.
pub fn worstcase_multibeam(model: &SensitivityModel, epsilon: f64) -> Result<MultibeamWorstCase> {
    check_epsilon(epsilon)?;
    let n = model.n_antennas() as f64;
    for (user, s) in model.s0().iter().enumerate() {
        let g = s.norm_sqr() / n;
        if g < n - FULL_GAIN_TOL {
            return Err(Error::NotFullGain { user, gain: g });
        }
    }
    let signs: Vec<f64> = (0..model.n_antennas())
        .map(|i| model.error_sign(i))
        .collect();
    let delta_d: Vec<f64> = signs.iter().map(|s| -epsilon * s).collect();
    let per_user_gains = (0..model.n_users())
        .map(|u| {
            n - epsilon
                * model
                    .eta()
                    .row(u)
                    .iter()
                    .zip(&signs)
                    .map(|(e, s)| e * s)
                    .sum::<f64>()
        })
        .collect();
    let approx_sum_gain =
        model.n_users() as f64 * n - epsilon * model.d().iter().map(|d| d.abs()).sum::<f64>();
    Ok(MultibeamWorstCase {
        delta_d,
        approx_sum_gain,
        per_user_gains,
    })
}

fn shifted(positions: &[f64], delta_d: &[f64]) -> Vec<f64> {
    assert_eq!(positions.len(), delta_d.len(), "one error per antenna");
    positions.iter().zip(delta_d).map(|(x, d)| x + d).collect()
}

/// Gain of fixed weights `w` at the perturbed positions `x + Δd`.
pub fn perturbed_gain(
    positions: &[f64],
    delta_d: &[f64],
    w: &[Complex64],
    target: &PolarTarget,
    wavelength: f64,
) -> f64 {
    let x = shifted(positions, delta_d);
    gain(
        w,
        &steering_vector(&x, target, wavelength, DistanceModel::Approx),
    )
}

/// Gains at `users` of the MRT beam toward `target0`, both evaluated at `x + Δd`.
pub fn perturbed_mrt_gains(
    positions: &[f64],
    delta_d: &[f64],
    target0: &PolarTarget,
    users: &[PolarTarget],
    wavelength: f64,
) -> Vec<f64> {
    let x = shifted(positions, delta_d);
    let w = BeamWeights::normalized(steering_vector(
        &x,
        target0,
        wavelength,
        DistanceModel::Approx,
    ));
    users
        .iter()
        .map(|u| perturbed_gain(&x, &vec![0.0; x.len()], &w, u, wavelength))
        .collect()
}

/// Polishes a layout so that MRT toward `target0` nulls every user.
///
/// Levenberg–Marquardt on the real and imaginary parts of `f_k(x)`. The track
/// length is not enforced, so the result may leave `[0, D_max]`; the minimum
/// spacing is checked on the way out.
pub fn refine_mrt_nulls(
    positions: &[f64],
    target0: &PolarTarget,
    users: &[PolarTarget],
    limits: &ArrayLimits,
) -> Result<Apv> {
    let n = positions.len();
    let lambda = limits.wavelength();
    let coeffs: Vec<PhaseCoeffs> = users.iter().map(|u| phase_coeffs(target0, u)).collect();
    let tau = 2.0 * std::f64::consts::PI / lambda;
    let residual = |x: &DVector<f64>| {
        let mut r = DVector::zeros(2 * coeffs.len());
        for (u, c) in coeffs.iter().enumerate() {
            let f: Complex64 = x
                .iter()
                .map(|&xi| Complex64::from_polar(1.0, tau * (c.a * xi + c.b * xi * xi)))
                .sum();
            r[2 * u] = f.re;
            r[2 * u + 1] = f.im;
        }
        r
    };
    let jacobian = |x: &DVector<f64>| {
        DMatrix::from_fn(2 * coeffs.len(), n, |row, i| {
            let c = &coeffs[row / 2];
            let xi = x[i];
            let e = Complex64::from_polar(1.0, tau * (c.a * xi + c.b * xi * xi))
                * Complex64::new(0.0, tau * (c.a + 2.0 * c.b * xi));
            if row % 2 == 0 {
                e.re
            } else {
                e.im
            }
        })
    };
    let worst = |r: &DVector<f64>| {
        (0..coeffs.len())
            .map(|u| (u, r[2 * u].hypot(r[2 * u + 1])))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a })
    };

    let target_residual = 1e-10 * n as f64;
    let mut x = DVector::from_column_slice(positions);
    let mut r = residual(&x);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    for _ in 0..500 {
        if worst(&r).1 <= target_residual {
            break;
        }
        let jm = jacobian(&x);
        let jtj = jm.transpose() * &jm;
        let g = jm.transpose() * &r;
        let mut damped = jtj.clone();
        let scale = jtj.diagonal().max().max(1.0);
        for i in 0..n {
            damped[(i, i)] += mu * (jtj[(i, i)] + 1e-12 * scale);
        }
        let Some(step) = damped.lu().solve(&(-g)) else {
            mu *= 10.0;
            continue;
        };
        let trial = &x + step;
        let rt = residual(&trial);
        let ct = rt.norm_squared();
        if ct < cost {
            x = trial;
            r = rt;
            cost = ct;
            mu = (mu / 3.0).max(1e-15);
        } else {
            mu *= 4.0;
            if mu > 1e12 {
                break;
            }
        }
    }
    let (user, res) = worst(&r);
    if res > target_residual {
        return Err(Error::NotNulled {
            user,
            residual: res,
        });
    }
    let mut out: Vec<f64> = x.iter().copied().collect();
    out.sort_by(f64::total_cmp);
    if !limits.spacing_ok(&out) {
        return Err(Error::Infeasible(
            "refined layout violates the minimum spacing".into(),
        ));
    }
    Apv::new(out)
}
