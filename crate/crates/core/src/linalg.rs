//! Small dense Hermitian helpers for the ZF hot path.
//!
//! Matrices are row-major `k × k` slices; `k` is the number of nulled users,
//! so everything here is a handful of flops and allocation-free where it matters.

use num_complex::Complex64;

/// In-place Cholesky `G = L L^H`; the strict upper triangle is left untouched.
/// Returns `false` when a pivot is not strictly positive.
pub(crate) fn cholesky_in_place(g: &mut [Complex64], k: usize) -> bool {
    for j in 0..k {
        let mut d = g[j * k + j].re;
        for p in 0..j {
            d -= g[j * k + p].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let ljj = d.sqrt();
        g[j * k + j] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..k {
            let mut s = g[i * k + j];
            for p in 0..j {
                s -= g[i * k + p] * g[j * k + p].conj();
            }
            g[i * k + j] = s / ljj;
        }
    }
    true
}

/// `(max L_ii / min L_ii)²`, a cheap estimate of the condition number of `G`.
pub(crate) fn condition_estimate(l: &[Complex64], k: usize) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..k {
        let d = l[i * k + i].re;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    (hi / lo).powi(2)
}

/// Solves `L L^H x = b` in place.
pub(crate) fn cholesky_solve(l: &[Complex64], k: usize, b: &mut [Complex64]) {
    for i in 0..k {
        let mut s = b[i];
        for p in 0..i {
            s -= l[i * k + p] * b[p];
        }
        b[i] = s / l[i * k + i].re;
    }
    for i in (0..k).rev() {
        let mut s = b[i];
        for p in (i + 1)..k {
            s -= l[p * k + i].conj() * b[p];
        }
        b[i] = s / l[i * k + i].re;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_hermitian_system() {
        let c = |re, im| Complex64::new(re, im);
        let g = vec![c(4.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)];
        let mut l = g.clone();
        assert!(cholesky_in_place(&mut l, 2));
        let x_true = [c(0.5, -1.0), c(2.0, 0.25)];
        let mut b = vec![
            g[0] * x_true[0] + g[1] * x_true[1],
            g[2] * x_true[0] + g[3] * x_true[1],
        ];
        cholesky_solve(&l, 2, &mut b);
        assert!((b[0] - x_true[0]).norm() < 1e-14);
        assert!((b[1] - x_true[1]).norm() < 1e-14);
        assert!(condition_estimate(&l, 2) >= 1.0);
    }

    #[test]
    fn rejects_singular() {
        let c = |re| Complex64::new(re, 0.0);
        let mut g = vec![c(1.0), c(1.0), c(1.0), c(1.0)];
        assert!(!cholesky_in_place(&mut g, 2));
    }
}
