//! Max-trace semidefinite program with a unit diagonal bound.
//!
//! `max Tr(QX)  s.t.  X ⪰ 0, X_ii ≤ 1` for a positive semidefinite `Q`. The
//! dual `min Σy  s.t.  Diag(y) − Q ⪰ 0` is followed along its log-barrier
//! central path with damped Newton steps. At every centre `S⁻¹/t` is a
//! near-feasible primal point; rescaled to unit diagonal it gives the lower
//! bound, while `Σy` is a valid upper bound throughout.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct SdrSolution {
    /// Primal point with unit diagonal.
    pub x: DMatrix<f64>,
    /// Dual objective, `≥` the optimum.
    pub upper: f64,
}

const MAX_OUTER: usize = 60;
const MAX_NEWTON: usize = 200;

/// Stops once `upper − Tr(QX) ≤ rel_gap · upper`.
pub(crate) fn max_trace_unit_diag(q: &DMatrix<f64>, rel_gap: f64) -> Result<SdrSolution> {
    let n = q.nrows();
    let scale = q.norm();
    if n == 0 || scale == 0.0 {
        return Ok(SdrSolution {
            x: DMatrix::identity(n, n),
            upper: 0.0,
        });
    }
    let qs = (q + q.transpose()) / (2.0 * scale);

    // Gershgorin start keeps Diag(y) − Q strictly positive definite
    let mut y = DVector::from_fn(n, |i, _| {
        qs.row(i).iter().map(|v| v.abs()).sum::<f64>() + 1.0
    });
    let mut t = n as f64 / y.sum();
    for _ in 0..MAX_OUTER {
        center(&qs, &mut y, t)?;
        let s_inv = slack(&qs, &y)
            .cholesky()
            .ok_or_else(|| Error::SolverFailure("dual slack lost definiteness".into()))?
            .inverse();
        let x = unit_diagonal(&s_inv);
        let lower = qs.component_mul(&x).sum();
        let upper = y.sum();
        if upper - lower <= rel_gap * upper.abs() {
            return Ok(SdrSolution {
                x,
                upper: upper * scale,
            });
        }
        t *= 10.0;
    }
    Err(Error::SolverFailure(
        "semidefinite relaxation did not reach the requested gap".into(),
    ))
}

fn slack(q: &DMatrix<f64>, y: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(y) - q
}

fn unit_diagonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let d: Vec<f64> = (0..m.nrows()).map(|i| m[(i, i)].sqrt()).collect();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        if i == j {
            1.0
        } else {
            m[(i, j)] / (d[i] * d[j])
        }
    })
}

/// Barrier value `t·Σy − log det S`, or `None` outside the cone.
fn barrier(q: &DMatrix<f64>, y: &DVector<f64>, t: f64) -> Option<f64> {
    let chol = slack(q, y).cholesky()?;
    let logdet = 2.0
        * chol
            .l_dirty()
            .diagonal()
            .iter()
            .map(|v| v.ln())
            .sum::<f64>();
    Some(t * y.sum() - logdet)
}

fn center(q: &DMatrix<f64>, y: &mut DVector<f64>, t: f64) -> Result<()> {
    let n = y.len();
    for _ in 0..MAX_NEWTON {
        let Some(chol) = slack(q, y).cholesky() else {
            return Err(Error::SolverFailure("dual slack lost definiteness".into()));
        };
        let s_inv = chol.inverse();
        let grad = DVector::from_fn(n, |i, _| t - s_inv[(i, i)]);
        let hess = s_inv.component_mul(&s_inv);
        let Some(hchol) = hess.cholesky() else {
            return Err(Error::SolverFailure("barrier Hessian is singular".into()));
        };
        let step = -hchol.solve(&grad);
        let decrement = -grad.dot(&step);
        if decrement <= 1e-12 {
            return Ok(());
        }
        let f0 = barrier(q, y, t).unwrap_or(f64::INFINITY);
        let mut alpha = 1.0;
        loop {
            let trial = &*y + &step * alpha;
            if let Some(f) = barrier(q, &trial, t) {
                if decrement < 0.25 || f <= f0 - 0.25 * alpha * decrement {
                    *y = trial;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-14 {
                // no further progress is representable at this t
                return Ok(());
            }
        }
    }
    Ok(())
}
