//! Closed-form APV constructions for an unbounded movement region.
//!
//! With MRT toward user 0, the gain at user `k` is `|f_k(x)|²/N` where
//! `f_k(x) = Σ_n exp(j·2π/λ·(a_k x_n + b_k x_n²))`. Nulling a user means
//! spreading the per-antenna phases evenly around the circle; full gain at a
//! user means making them all coincide. Positions may exceed `D_max` unless
//! [`AperturePolicy::Strict`] is requested.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Apv, ArrayLimits, PolarTarget};

/// Below this `|b|·λ` the phase is treated as linear in `x`.
pub const LINEAR_CURVATURE: f64 = 1e-9;

/// `|a|` below this counts as "same angle as the target".
const SAME_ANGLE: f64 = 1e-12;

/// Largest Lemma-style offset multiplier tried by [`extend_apv`].
const MAX_EXTENSION_Q: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AperturePolicy {
    /// Ignore `D_max`; the caller reads the realized aperture off the APV.
    #[default]
    Relaxed,
    /// Fail with [`Error::ApertureExceeded`] when the last antenna passes `D_max`.
    Strict,
}

/// Linear and quadratic phase coefficients of user `k` relative to user 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCoeffs {
    pub a: f64,
    pub b: f64,
}

pub fn phase_coeffs(target0: &PolarTarget, target_k: &PolarTarget) -> PhaseCoeffs {
    let s0 = target0.angle().sin();
    let sk = target_k.angle().sin();
    PhaseCoeffs {
        a: target0.angle().cos() - target_k.angle().cos(),
        b: -(s0 * s0 / (2.0 * target0.distance()) - sk * sk / (2.0 * target_k.distance())),
    }
}

impl PhaseCoeffs {
    /// `(a x + b x²)/λ`, the per-antenna phase in cycles.
    pub fn cycles(&self, x: f64, wavelength: f64) -> f64 {
        (self.a * x + self.b * x * x) / wavelength
    }

    pub fn a_hat(&self, wavelength: f64) -> f64 {
        self.a / wavelength
    }

    /// `sqrt(b/λ)`, undefined for negative curvature.
    pub fn b_hat(&self, wavelength: f64) -> Option<f64> {
        (self.b >= 0.0).then(|| (self.b / wavelength).sqrt())
    }

    fn is_linear(&self, wavelength: f64) -> bool {
        self.b.abs() < LINEAR_CURVATURE / wavelength
    }

    fn is_degenerate(&self, wavelength: f64) -> bool {
        self.a.abs() < SAME_ANGLE && self.is_linear(wavelength)
    }
}

/// `f_k(x)`: the MRT cross-correlation between user 0 and user `k`.
pub fn cross_correlation(coeffs: &PhaseCoeffs, positions: &[f64], wavelength: f64) -> Complex64 {
    positions
        .iter()
        .map(|&x| Complex64::from_polar(1.0, 2.0 * PI * coeffs.cycles(x, wavelength)))
        .sum()
}

/// Smallest `x ≥ lower` whose phase is `residue` cycles modulo one.
fn next_with_residue(c: &PhaseCoeffs, wavelength: f64, residue: f64, lower: f64) -> f64 {
    let phi = |x: f64| c.cycles(x, wavelength);
    let up = |from: f64| residue + (from - residue).ceil();
    let down = |from: f64| residue + (from - residue).floor();

    if c.is_linear(wavelength) {
        let t = if c.a > 0.0 {
            up(phi(lower))
        } else {
            down(phi(lower))
        };
        return polish(c, wavelength, wavelength * t / c.a, t);
    }
    let vertex = -c.a / (2.0 * c.b);
    if vertex > lower {
        // monotone piece [lower, vertex], heading toward phi(vertex)
        let t = if c.b > 0.0 {
            down(phi(lower))
        } else {
            up(phi(lower))
        };
        let reachable = if c.b > 0.0 {
            t >= phi(vertex)
        } else {
            t <= phi(vertex)
        };
        if reachable {
            return polish(c, wavelength, quadratic_roots(c, wavelength, t).0, t);
        }
    }
    let start = lower.max(vertex);
    let t = if c.b > 0.0 {
        up(phi(start))
    } else {
        down(phi(start))
    };
    polish(c, wavelength, quadratic_roots(c, wavelength, t).1, t)
}

/// Both roots of `b x² + a x = λ t`, ordered; no cancellation.
fn quadratic_roots(c: &PhaseCoeffs, wavelength: f64, t: f64) -> (f64, f64) {
    let disc = (c.a * c.a + 4.0 * c.b * wavelength * t).max(0.0);
    let sq = disc.sqrt();
    let q = -0.5 * (c.a + c.a.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        let v = -c.a / (2.0 * c.b);
        (v, v)
    } else {
        (q / c.b, -wavelength * t / q)
    };
    (r1.min(r2), r1.max(r2))
}

/// Newton steps on `phi(x) = t` to remove rounding from the closed form.
fn polish(c: &PhaseCoeffs, wavelength: f64, mut x: f64, t: f64) -> f64 {
    for _ in 0..3 {
        let slope = (c.a + 2.0 * c.b * x) / wavelength;
        if slope.abs() < 1e-6 {
            break;
        }
        let step = (c.cycles(x, wavelength) - t) / slope;
        if step == 0.0 {
            break;
        }
        x -= step;
    }
    x
}

fn residue_layout(
    coeffs: &PhaseCoeffs,
    residues: impl Iterator<Item = f64>,
    limits: &ArrayLimits,
    policy: AperturePolicy,
) -> Result<Apv> {
    let lambda = limits.wavelength();
    if coeffs.is_degenerate(lambda) {
        return Err(Error::DegenerateDirection { user: 0 });
    }
    let mut xs: Vec<f64> = Vec::new();
    for u in residues {
        let lower = xs.last().map_or(0.0, |&p| p + limits.d_min());
        xs.push(next_with_residue(coeffs, lambda, u, lower));
    }
    finish(xs, limits, policy)
}

fn finish(xs: Vec<f64>, limits: &ArrayLimits, policy: AperturePolicy) -> Result<Apv> {
    let apv = Apv::from_unsorted(xs)?;
    check_aperture(&apv, limits, policy)?;
    Ok(apv)
}

pub fn check_aperture(apv: &Apv, limits: &ArrayLimits, policy: AperturePolicy) -> Result<()> {
    let last = apv[apv.len() - 1];
    if policy == AperturePolicy::Strict && last > limits.d_max() * (1.0 + 1e-12) {
        return Err(Error::ApertureExceeded {
            aperture: last,
            d_max: limits.d_max(),
        });
    }
    Ok(())
}

/// Places antenna `n` where the phase equals `2πn/N` (mod 2π), nulling one user.
pub fn nulling_apv_single(
    coeffs: &PhaseCoeffs,
    n: usize,
    limits: &ArrayLimits,
    policy: AperturePolicy,
) -> Result<Apv> {
    if n < 2 {
        return Err(Error::InvalidInput(
            "nulling needs at least two antennas".into(),
        ));
    }
    residue_layout(
        coeffs,
        (1..=n).map(|i| (i % n) as f64 / n as f64),
        limits,
        policy,
    )
}

/// Places every antenna at phase 0 (mod 2π): full MRT gain at one extra user.
pub fn aligned_apv_single(
    coeffs: &PhaseCoeffs,
    n: usize,
    limits: &ArrayLimits,
    policy: AperturePolicy,
) -> Result<Apv> {
    if n == 0 {
        return Err(Error::InvalidInput("need at least one antenna".into()));
    }
    residue_layout(coeffs, std::iter::repeat_n(0.0, n), limits, policy)
}

/// Replicates `base` into `n2` shells so that one more same-angle user is nulled:
/// `x_{n1 + (n2−1)N1} = sqrt(x_{n1}² + (n2−1)d)` with `d = (1/N2 + q)λ/|b|`.
pub fn extend_apv(
    base: &Apv,
    coeff_next: &PhaseCoeffs,
    n2: usize,
    limits: &ArrayLimits,
    policy: AperturePolicy,
) -> Result<Apv> {
    if n2 == 0 {
        return Err(Error::InvalidInput(
            "extension factor must be positive".into(),
        ));
    }
    if n2 == 1 {
        return Ok(base.clone());
    }
    let lambda = limits.wavelength();
    if coeff_next.a.abs() >= SAME_ANGLE {
        return Err(Error::MixedAngles { user: 0 });
    }
    if coeff_next.is_linear(lambda) {
        return Err(Error::DegenerateDirection { user: 0 });
    }
    if base.iter().any(|&x| x < 0.0) {
        return Err(Error::InvalidInput(
            "extension needs non-negative base positions".into(),
        ));
    }
    for q in 0..=MAX_EXTENSION_Q {
        let d = (1.0 / n2 as f64 + q as f64) * lambda / coeff_next.b.abs();
        let mut xs: Vec<f64> = (0..n2)
            .flat_map(|j| base.iter().map(move |&x| (x * x + j as f64 * d).sqrt()))
            .collect();
        xs.sort_by(f64::total_cmp);
        if xs
            .windows(2)
            .all(|w| w[1] - w[0] >= limits.spacing_threshold())
        {
            return finish(xs, limits, policy);
        }
    }
    Err(Error::SpacingUnattainable {
        max_q: MAX_EXTENSION_Q,
    })
}

/// `n = n1 + (n2−1)·N1` (1-based on both sides).
pub fn combined_index(n1: usize, n2: usize, big_n1: usize) -> usize {
    n1 + (n2 - 1) * big_n1
}

/// Prime factors of `n` in ascending order, with multiplicity.
pub fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        while n % p == 0 {
            out.push(p);
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Splits `n` into `k` factors: the first `k−1` primes, then the product of the rest.
pub fn group_factors(n: usize, k: usize) -> Result<Vec<usize>> {
    let primes = prime_factors(n);
    if k > primes.len() {
        return Err(Error::InfeasibleFactorization {
            n,
            users: k,
            factors: primes.len(),
        });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut groups = primes[..k - 1].to_vec();
    groups.push(primes[k - 1..].iter().product());
    Ok(groups)
}

/// APV on which MRT toward `target0` nulls every user in `users`.
pub fn construct_optimal_apv(
    target0: &PolarTarget,
    users: &[PolarTarget],
    n: usize,
    limits: &ArrayLimits,
    policy: AperturePolicy,
) -> Result<Apv> {
    let lambda = limits.wavelength();
    if users.is_empty() {
        return finish(
            (0..n).map(|i| i as f64 * limits.d_min()).collect(),
            limits,
            policy,
        );
    }
    let coeffs: Vec<PhaseCoeffs> = users.iter().map(|u| phase_coeffs(target0, u)).collect();
    if let Some(k) = coeffs.iter().position(|c| c.is_degenerate(lambda)) {
        return Err(Error::DegenerateDirection { user: k });
    }
    let groups = group_factors(n, users.len())?;
    if users.len() >= 2 {
        if let Some(k) = coeffs.iter().position(|c| c.a.abs() >= SAME_ANGLE) {
            return Err(Error::MixedAngles { user: k });
        }
    }
    let mut apv = nulling_apv_single(&coeffs[0], groups[0], limits, AperturePolicy::Relaxed)?;
    for (k, (c, &g)) in coeffs.iter().zip(&groups).enumerate().skip(1) {
        apv = extend_apv(&apv, c, g, limits, AperturePolicy::Relaxed).map_err(|e| match e {
            Error::DegenerateDirection { .. } => Error::DegenerateDirection { user: k },
            Error::MixedAngles { .. } => Error::MixedAngles { user: k },
            other => other,
        })?;
    }
    check_aperture(&apv, limits, policy)?;
    Ok(apv)
}

/// Last continued-fraction convergent `p/q` with `q ≤ max_denominator`.
///
/// Convergents satisfy `|value − p/q| < 1/(q·q_next)` with `q_next > max_denominator`.
pub fn rationalize(value: f64, max_denominator: i64) -> (i64, i64) {
    assert!(max_denominator >= 1, "max_denominator must be >= 1");
    assert!(value.is_finite(), "cannot rationalize {value}");
    let max = max_denominator as i128;
    let (mut p0, mut q0, mut p1, mut q1): (i128, i128, i128, i128) = (0, 1, 1, 0);
    let mut x = value;
    loop {
        let a = x.floor();
        let ai = a as i128;
        let q2 = q0 + ai * q1;
        if q2 > max {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p0 + ai * p1, q2);
        let frac = x - a;
        if frac == 0.0 {
            break;
        }
        x = 1.0 / frac;
        if !x.is_finite() || x > 1e18 {
            break;
        }
    }
    let (p, q) = (p1, q1);
    (p as i64, q as i64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalizeConfig {
    pub max_denominator: i64,
    /// Largest accepted `|value − p/q|`; use `f64::INFINITY` to accept truncation.
    pub tolerance: f64,
}

impl Default for RationalizeConfig {
    fn default() -> Self {
        Self {
            max_denominator: 50,
            tolerance: 1e-9,
        }
    }
}

/// Uniform spacing that puts a grating lobe on every user.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSpacing {
    /// `[p_{k,1}, p_{k,2}]` for `â_k` and `b̂_k`.
    pub numerators: Vec<[i64; 2]>,
    pub denominators: Vec<[i64; 2]>,
    /// `m̂_{k,i} = p_{k,i}/q_{k,i} · Π q`.
    pub scaled: Vec<[i128; 2]>,
    /// Greatest common divisor of all `m̂`.
    pub c_max: i128,
    /// Smallest multiplier lifting the spacing to at least `D_min`.
    pub zeta: i64,
    pub d_star: f64,
}

impl RationalSpacing {
    pub fn apv(&self, n: usize, limits: &ArrayLimits, policy: AperturePolicy) -> Result<Apv> {
        finish(
            (0..n).map(|i| i as f64 * self.d_star).collect(),
            limits,
            policy,
        )
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn grating_lobe_spacing(
    coeffs: &[PhaseCoeffs],
    limits: &ArrayLimits,
    cfg: &RationalizeConfig,
) -> Result<RationalSpacing> {
    let lambda = limits.wavelength();
    let mut numerators = Vec::with_capacity(coeffs.len());
    let mut denominators = Vec::with_capacity(coeffs.len());
    for (k, c) in coeffs.iter().enumerate() {
        let b_hat = c
            .b_hat(lambda)
            .ok_or(Error::NegativeCurvature { user: k, b: c.b })?;
        let mut num = [0i64; 2];
        let mut den = [1i64; 2];
        for (i, v) in [c.a_hat(lambda), b_hat].into_iter().enumerate() {
            let (p, q) = rationalize(v, cfg.max_denominator);
            if (v - p as f64 / q as f64).abs() > cfg.tolerance {
                return Err(Error::IrrationalInput {
                    user: k,
                    value: v,
                    max_denominator: cfg.max_denominator,
                });
            }
            num[i] = p;
            den[i] = q;
        }
        numerators.push(num);
        denominators.push(den);
    }

    let overflow = || Error::InvalidInput("denominator product overflows".into());
    let mut prod: i128 = 1;
    for d in denominators.iter().flatten() {
        prod = prod.checked_mul(*d as i128).ok_or_else(overflow)?;
    }
    let mut scaled = Vec::with_capacity(coeffs.len());
    let mut c_max: i128 = 0;
    for (num, den) in numerators.iter().zip(&denominators) {
        let mut m = [0i128; 2];
        for i in 0..2 {
            m[i] = (num[i] as i128)
                .checked_mul(prod / den[i] as i128)
                .ok_or_else(overflow)?;
            c_max = gcd(c_max, m[i]);
        }
        scaled.push(m);
    }

    let base = if c_max == 0 {
        limits.d_min()
    } else {
        prod as f64 / c_max as f64
    };
    let zeta = (limits.d_min() / base * (1.0 - 1e-12)).ceil().max(1.0) as i64;
    Ok(RationalSpacing {
        numerators,
        denominators,
        scaled,
        c_max,
        zeta,
        d_star: zeta as f64 * base,
    })
}
