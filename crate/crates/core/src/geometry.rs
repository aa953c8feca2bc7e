//! Near-field geometry of a linear movable-antenna array.
//!
//! Antennas sit on a 1D track (the x-axis) and users are described in the
//! polar frame of the reference point `O` at `x = 0`. The array response toward
//! a user is the unit-modulus steering vector built from the per-antenna path
//! difference `r_n − R`.

use std::f64::consts::PI;
use std::ops::Deref;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative slack used when comparing inter-antenna spacings against `d_min`.
pub const SPACING_SLACK: f64 = 1e-9;

/// A user location `(R, θ)` relative to the reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarTarget {
    distance: f64,
    angle: f64,
}

impl PolarTarget {
    pub fn new(distance: f64, angle: f64) -> Result<Self> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "target distance must be positive, got {distance}"
            )));
        }
        if !(0.0..=PI).contains(&angle) {
            return Err(Error::InvalidInput(format!(
                "target angle must lie in [0, pi], got {angle}"
            )));
        }
        Ok(Self { distance, angle })
    }

    /// Point `(x, y)` with `y ≥ 0` in the plane of the track.
    pub fn from_cartesian(x: f64, y: f64) -> Result<Self> {
        if y < 0.0 {
            return Err(Error::InvalidInput(format!("y must be >= 0, got {y}")));
        }
        Self::new(x.hypot(y), y.atan2(x))
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn to_cartesian(&self) -> (f64, f64) {
        (
            self.distance * self.angle.cos(),
            self.distance * self.angle.sin(),
        )
    }
}

/// Antenna position vector: strictly increasing coordinates on the track.
#[derive(Debug, Clone, PartialEq)]
pub struct Apv(Vec<f64>);

impl Apv {
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidInput(
                "an APV needs at least one antenna".into(),
            ));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("APV coordinates must be finite".into()));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "APV coordinates must be strictly increasing".into(),
            ));
        }
        Ok(Self(positions))
    }

    /// Sorts the coordinates first; fails on duplicates.
    pub fn from_unsorted(mut positions: Vec<f64>) -> Result<Self> {
        positions.sort_by(f64::total_cmp);
        Self::new(positions)
    }

    pub fn positions(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Distance between the outermost antennas.
    pub fn aperture(&self) -> f64 {
        self.0[self.0.len() - 1] - self.0[0]
    }

    pub fn min_spacing(&self) -> f64 {
        self.0
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

impl Deref for Apv {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Track length, minimum spacing and carrier wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayLimits {
    d_max: f64,
    d_min: f64,
    wavelength: f64,
}

impl ArrayLimits {
    pub fn new(d_max: f64, d_min: f64, wavelength: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::InvalidInput(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        if !(d_min.is_finite() && d_min > 0.0 && d_max.is_finite() && d_min <= d_max) {
            return Err(Error::InvalidInput(format!(
                "need 0 < d_min <= d_max, got d_min = {d_min}, d_max = {d_max}"
            )));
        }
        Ok(Self {
            d_max,
            d_min,
            wavelength,
        })
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// `d_min` less the rounding slack used in all spacing comparisons.
    pub fn spacing_threshold(&self) -> f64 {
        self.d_min * (1.0 - SPACING_SLACK)
    }

    /// Fails when `N` antennas cannot fit on the track.
    pub fn check_count(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidInput("need at least one antenna".into()));
        }
        let needed = (n - 1) as f64 * self.d_min;
        if needed > self.d_max * (1.0 + SPACING_SLACK) {
            return Err(Error::Infeasible(format!(
                "{n} antennas need {needed:.6} m of track but d_max = {:.6} m",
                self.d_max
            )));
        }
        Ok(())
    }

    /// Pairwise spacing check on an arbitrary (possibly unsorted) layout.
    pub fn spacing_ok(&self, positions: &[f64]) -> bool {
        let mut sorted = positions.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted
            .windows(2)
            .all(|w| w[1] - w[0] >= self.spacing_threshold())
    }

    /// Spacing plus the track bounds `[0, d_max]`.
    pub fn is_feasible(&self, positions: &[f64]) -> bool {
        let tol = self.d_max * SPACING_SLACK;
        positions
            .iter()
            .all(|&x| x >= -tol && x <= self.d_max + tol)
            && self.spacing_ok(positions)
    }
}

/// Transmit weights with Euclidean norm at most one.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights(Vec<Complex64>);

impl BeamWeights {
    pub const NORM_TOL: f64 = 1e-12;

    pub fn new(weights: Vec<Complex64>) -> Result<Self> {
        let norm = l2_norm(&weights);
        if !norm.is_finite() || norm > 1.0 + Self::NORM_TOL {
            return Err(Error::InvalidInput(format!(
                "beam weights must have norm <= 1, got {norm}"
            )));
        }
        Ok(Self(weights))
    }

    /// Scales `v` to unit norm. A zero vector stays zero.
    pub fn normalized(mut v: Vec<Complex64>) -> Self {
        let norm = l2_norm(&v);
        if norm > 0.0 {
            v.iter_mut().for_each(|z| *z /= norm);
        }
        Self(v)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.0)
    }

    /// Reorders entries so that entry `i` becomes `self[perm[i]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self(perm.iter().map(|&i| self.0[i]).collect())
    }
}

impl Deref for BeamWeights {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

/// How the antenna-to-user distance is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceModel {
    /// Second-order Fresnel expansion `R − x cosθ + x² sin²θ / (2R)`.
    #[default]
    Approx,
    /// Law of cosines.
    Exact,
    /// Planar wavefront `R − x cosθ`, i.e. the far-field model.
    Planar,
}

impl DistanceModel {
    pub fn distance(self, target: &PolarTarget, x: f64) -> f64 {
        match self {
            DistanceModel::Approx => approx_distance(target, x),
            DistanceModel::Exact => exact_distance(target, x),
            DistanceModel::Planar => target.distance - x * target.angle.cos(),
        }
    }

    /// `r(x) − R`, evaluated without cancellation.
    pub fn path_difference(self, target: &PolarTarget, x: f64) -> f64 {
        let (r, c) = (target.distance, target.angle.cos());
        match self {
            DistanceModel::Approx => {
                let s = target.angle.sin();
                -x * c + x * x * s * s / (2.0 * r)
            }
            DistanceModel::Exact => {
                let u = x * x / (r * r) - 2.0 * x * c / r;
                r * u / ((1.0 + u).sqrt() + 1.0)
            }
            DistanceModel::Planar => -x * c,
        }
    }
}

pub fn exact_distance(target: &PolarTarget, x: f64) -> f64 {
    let r = target.distance;
    r * (1.0 + x * x / (r * r) - 2.0 * x * target.angle.cos() / r).sqrt()
}

pub fn approx_distance(target: &PolarTarget, x: f64) -> f64 {
    let r = target.distance;
    let s = target.angle.sin();
    r - x * target.angle.cos() + x * x * s * s / (2.0 * r)
}

pub fn wavenumber(wavelength: f64) -> f64 {
    2.0 * PI / wavelength
}

/// Single steering-vector entry `exp(j·2π/λ·(r(x) − R))`.
#[inline]
pub fn steering_entry(
    x: f64,
    target: &PolarTarget,
    wavelength: f64,
    model: DistanceModel,
) -> Complex64 {
    Complex64::from_polar(
        1.0,
        wavenumber(wavelength) * model.path_difference(target, x),
    )
}

pub fn steering_vector(
    positions: &[f64],
    target: &PolarTarget,
    wavelength: f64,
    model: DistanceModel,
) -> Vec<Complex64> {
    positions
        .iter()
        .map(|&x| steering_entry(x, target, wavelength, model))
        .collect()
}

/// `u^H v`.
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `|w^H a|²` for a precomputed steering vector.
pub fn gain(w: &[Complex64], a: &[Complex64]) -> f64 {
    inner(w, a).norm_sqr()
}

pub fn beam_gain(
    positions: &[f64],
    w: &[Complex64],
    target: &PolarTarget,
    wavelength: f64,
    model: DistanceModel,
) -> f64 {
    gain(w, &steering_vector(positions, target, wavelength, model))
}
