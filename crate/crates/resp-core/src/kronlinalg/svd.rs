//! Thin SVD by one-sided Jacobi rotations.
//!
//! Used for EOF extraction, where the data matrix is tall (many grid cells,
//! few decades of observations). One-sided Jacobi orthogonalizes the short
//! side's columns directly, giving singular vectors accurate to near machine
//! precision without squaring the condition number through a Gram matrix.

use super::mat::Mat;

/// Thin singular value decomposition `A = U · diag(s) · Vᵀ`.
///
/// `u` is `m × min(m,n)`, `v` is `n × min(m,n)`, singular values descend.
/// Columns of `u`/`v` belonging to (numerically) zero singular values are
/// zeroed rather than fabricated.
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v: Mat,
}

/// Compute the thin SVD of `a`. Deterministic: fixed sweep order, no pivot
/// randomization. Converges quadratically; 60 sweeps is far beyond need for
/// the matrix sizes in this crate.
pub fn svd(a: &Mat) -> Svd {
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let t = svd_tall(&a.transpose());
        Svd { u: t.v, s: t.s, v: t.u }
    }
}

fn svd_tall(a: &Mat) -> Svd {
    let m = a.rows();
    let n = a.cols();
    debug_assert!(m >= n);
    let mut u = a.clone();
    let mut v = Mat::identity(n);
    let eps = 1e-15;

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    app += up * up;
                    aqq += uq * uq;
                    apq += up * uq;
                }
                if apq.abs() <= eps * (app * aqq).sqrt() || apq == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort descending.
    let mut norms: Vec<(f64, usize)> = (0..n)
        .map(|j| ((0..m).map(|i| u[(i, j)] * u[(i, j)]).sum::<f64>().sqrt(), j))
        .collect();
    norms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

    let smax = norms.first().map(|x| x.0).unwrap_or(0.0);
    let cutoff = smax * (f64::EPSILON * m as f64);
    let mut us = Mat::zeros(m, n);
    let mut vs = Mat::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    for (dst, &(norm, src)) in norms.iter().enumerate() {
        s.push(norm);
        if norm > cutoff {
            for i in 0..m {
                us[(i, dst)] = u[(i, src)] / norm;
            }
        }
        for i in 0..n {
            vs[(i, dst)] = v[(i, src)];
        }
    }
    Svd { u: us, s, v: vs }
}
