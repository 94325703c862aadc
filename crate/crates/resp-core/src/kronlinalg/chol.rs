//! Cholesky factorization with the crate-wide jitter policy.
//!
//! Every symmetric positive-definite solve in the model flows through
//! [`factor_spd`]: factor once, reuse for solves and log-determinants. On a
//! failed factorization the matrix gets one retry with `1e-8 · mean(diag)`
//! added to the diagonal; a second failure is reported with the smallest
//! pivot encountered so callers can see how indefinite the matrix was.

use super::mat::Mat;
use super::LinalgError;

/// Relative diagonal jitter applied on a failed factorization (single retry).
pub const JITTER_REL: f64 = 1e-8;

/// Relative symmetry tolerance enforced by [`factor_spd`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Lower-triangular Cholesky factor `L` with `L·Lᵀ = M (+ δI)`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    l: Mat,
    /// Jitter that was added to the diagonal to obtain the factorization (0 if none).
    jitter: f64,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn lower(&self) -> &Mat {
        &self.l
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `log |M|` via `2 Σ log L_ii`.
    pub fn logdet(&self) -> f64 {
        (0..self.l.rows()).map(|i| self.l[(i, i)].ln()).sum::<f64>() * 2.0
    }

    /// Solve `M · X = rhs` for a matrix right-hand side.
    pub fn solve(&self, rhs: &Mat) -> Mat {
        assert_eq!(rhs.rows(), self.dim(), "solve: rhs rows must match factor dim");
        let n = self.dim();
        let r = rhs.cols();
        let mut x = rhs.clone();
        // Forward: L y = rhs.
        for i in 0..n {
            for k in 0..i {
                let lik = self.l[(i, k)];
                if lik == 0.0 {
                    continue;
                }
                let (top, bot) = x.as_mut_slice().split_at_mut(i * r);
                let yk = &top[k * r..(k + 1) * r];
                for (xi, yk) in bot[..r].iter_mut().zip(yk) {
                    *xi -= lik * yk;
                }
            }
            let d = self.l[(i, i)];
            for v in x.row_mut(i) {
                *v /= d;
            }
        }
        // Backward: Lᵀ x = y.
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let lki = self.l[(k, i)];
                if lki == 0.0 {
                    continue;
                }
                let (top, bot) = x.as_mut_slice().split_at_mut(k * r);
                let xk = &bot[..r];
                let xi = &mut top[i * r..(i + 1) * r];
                for (a, b) in xi.iter_mut().zip(xk) {
                    *a -= lki * b;
                }
            }
            let d = self.l[(i, i)];
            for v in x.row_mut(i) {
                *v /= d;
            }
        }
        x
    }

    /// Solve `M · x = rhs` for a vector right-hand side.
    pub fn solve_vec(&self, rhs: &[f64]) -> Vec<f64> {
        self.solve(&Mat::col_vec(rhs)).into_vec()
    }

    /// Solve the half-system `Lᵀ x = z` (used to sample from `N(·, M⁻¹)`).
    pub fn solve_lt_vec(&self, z: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(z.len(), n);
        let mut x = z.to_vec();
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.l[(k, i)] * x[k];
            }
            x[i] /= self.l[(i, i)];
        }
        x
    }

    /// `M⁻¹` materialized (small matrices only; used for posterior covariances).
    pub fn inverse(&self) -> Mat {
        self.solve(&Mat::identity(self.dim()))
    }
}

/// Raw lower-Cholesky attempt. On failure returns the offending pivot.
fn try_cholesky(m: &Mat) -> Result<Mat, f64> {
    let n = m.rows();
    let mut l = Mat::zeros(n, n);
    let mut smallest = f64::INFINITY;
    for j in 0..n {
        let mut d = m[(j, j)];
        for t in 0..j {
            d -= l[(j, t)] * l[(j, t)];
        }
        if d < smallest || d.is_nan() {
            smallest = d;
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(smallest);
        }
        let root = d.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for t in 0..j {
                s -= l[(i, t)] * l[(j, t)];
            }
            l[(i, j)] = s / root;
        }
    }
    Ok(l)
}

/// Factor a symmetric positive-definite matrix, applying the jitter policy.
///
/// Validates squareness, finiteness and symmetry (within [`SYMMETRY_TOL`]
/// relative to the largest entry) before touching the triangle.
pub fn factor_spd(m: &Mat) -> Result<CholeskyFactor, LinalgError> {
    if m.rows() != m.cols() {
        return Err(LinalgError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if let Some((row, col)) = m.first_non_finite() {
        return Err(LinalgError::NonFinite { row, col });
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let asym = m.max_asymmetry();
    if asym > SYMMETRY_TOL * scale {
        return Err(LinalgError::NotSymmetric { max_asym: asym });
    }
    match try_cholesky(m) {
        Ok(l) => Ok(CholeskyFactor { l, jitter: 0.0 }),
        Err(first_pivot) => {
            let n = m.rows() as f64;
            let delta = JITTER_REL * m.trace() / n;
            if !(delta > 0.0) {
                return Err(LinalgError::Singular { smallest_pivot: first_pivot });
            }
            let mut jittered = m.clone();
            jittered.add_diag(delta);
            match try_cholesky(&jittered) {
                Ok(l) => Ok(CholeskyFactor { l, jitter: delta }),
                Err(pivot) => Err(LinalgError::Singular { smallest_pivot: pivot.min(first_pivot) }),
            }
        }
    }
}
