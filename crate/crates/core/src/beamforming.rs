//! MRT and zero-forcing transmit weights.
//!
//! The ZF weights project the target's steering vector onto the orthogonal
//! complement of the nulled users' steering vectors and normalize the result.
//! For unit-norm weights the target gain equals `N − I(x)` with
//! `I(x) = a₀^H A (A^H A)⁻¹ A^H a₀`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{inner, steering_vector, BeamWeights, DistanceModel, PolarTarget};
use crate::linalg::{cholesky_in_place, cholesky_solve, condition_estimate};

/// Gram matrices with a larger condition estimate are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct ZfResult {
    pub weights: BeamWeights,
    /// `I(x)`, the target power lost to the projection.
    pub residual: f64,
    /// `N − I(x)`.
    pub target_gain: f64,
}

/// `w = a/√N`.
pub fn mrt_from_vector(a: &[Complex64]) -> BeamWeights {
    BeamWeights::normalized(a.to_vec())
}

pub fn mrt_weights(
    positions: &[f64],
    target: &PolarTarget,
    wavelength: f64,
    model: DistanceModel,
) -> BeamWeights {
    mrt_from_vector(&steering_vector(positions, target, wavelength, model))
}

pub fn zf_weights(
    positions: &[f64],
    target0: &PolarTarget,
    nulled: &[PolarTarget],
    wavelength: f64,
    model: DistanceModel,
) -> Result<ZfResult> {
    let a0 = steering_vector(positions, target0, wavelength, model);
    let cols: Vec<Vec<Complex64>> = nulled
        .iter()
        .map(|t| steering_vector(positions, t, wavelength, model))
        .collect();
    zf_from_vectors(&a0, &cols)
}

/// ZF weights from precomputed steering vectors (`cols` are the nulled users).
pub fn zf_from_vectors(a0: &[Complex64], cols: &[Vec<Complex64>]) -> Result<ZfResult> {
    let n = a0.len();
    let k = cols.len();
    if k == 0 {
        return Ok(ZfResult {
            weights: mrt_from_vector(a0),
            residual: 0.0,
            target_gain: n as f64,
        });
    }
    if k >= n {
        return Err(Error::InvalidInput(format!(
            "zero-forcing needs fewer nulled users ({k}) than antennas ({n})"
        )));
    }
    let gram = gram_matrix(cols);
    let mut l = gram.clone();
    if !cholesky_in_place(&mut l, k) {
        return Err(rank_deficient(cols, f64::INFINITY));
    }
    let condition = condition_estimate(&l, k);
    if condition > CONDITION_LIMIT {
        return Err(rank_deficient(cols, condition));
    }

    let mut y: Vec<Complex64> = cols.iter().map(|c| inner(c, a0)).collect();
    let v = y.clone();
    cholesky_solve(&l, k, &mut y);
    let residual = inner(&v, &y).re.clamp(0.0, n as f64);

    let mut u = a0.to_vec();
    subtract_span(&mut u, cols, &y);
    // second projection pass mops up rounding left by the first
    let mut z: Vec<Complex64> = cols.iter().map(|c| inner(c, &u)).collect();
    cholesky_solve(&l, k, &mut z);
    subtract_span(&mut u, cols, &z);

    Ok(ZfResult {
        weights: BeamWeights::normalized(u),
        residual,
        target_gain: n as f64 - residual,
    })
}

fn gram_matrix(cols: &[Vec<Complex64>]) -> Vec<Complex64> {
    let k = cols.len();
    let mut g = vec![Complex64::new(0.0, 0.0); k * k];
    for i in 0..k {
        for j in i..k {
            let v = inner(&cols[i], &cols[j]);
            g[i * k + j] = v;
            g[j * k + i] = v.conj();
        }
    }
    g
}

fn subtract_span(u: &mut [Complex64], cols: &[Vec<Complex64>], coef: &[Complex64]) {
    for (c, &y) in cols.iter().zip(coef) {
        for (ui, ci) in u.iter_mut().zip(c) {
            *ui -= ci * y;
        }
    }
}

/// Names the most collinear pair of nulled users.
pub(crate) fn rank_deficient(cols: &[Vec<Complex64>], condition: f64) -> Error {
    let mut best = (0, 1.min(cols.len().saturating_sub(1)), -1.0);
    for i in 0..cols.len() {
        for j in (i + 1)..cols.len() {
            let nrm = (inner(&cols[i], &cols[i]).re * inner(&cols[j], &cols[j]).re).sqrt();
            let coh = inner(&cols[i], &cols[j]).norm() / nrm;
            if coh > best.2 {
                best = (i, j, coh);
            }
        }
    }
    Error::RankDeficient {
        first: best.0,
        second: best.1,
        condition,
    }
}
