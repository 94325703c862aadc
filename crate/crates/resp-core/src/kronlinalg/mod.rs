//! Kronecker-structured linear algebra.
//!
//! The model's covariances are Kronecker products of small factors, and the
//! whole point of this module is that they stay that way. For `A ⊗ B` acting
//! on a conformable stack `C` of blocks `C_1 … C_n` (each `q × r`),
//!
//! ```text
//! (A ⊗ B) C = [ B · Σ_j a_{1j} C_j ; … ; B · Σ_j a_{mj} C_j ]
//! ```
//!
//! which costs `O(mnqr + mpqr)` flops and `O(qr)` workspace instead of the
//! `O(mnpq)` storage of the materialized product. [`kron_apply`] implements
//! exactly this blocked form; [`kron_vec_right`] covers the mixed-product
//! special case `(A ⊗ c) B = (A B) ⊗ c`. Instrumented builds tally flops in
//! [`flops`] so tests can pin the asymptotics.

mod chol;
pub mod flops;
mod mat;
mod svd;

pub use chol::{factor_spd, CholeskyFactor, JITTER_REL, SYMMETRY_TOL};
pub use mat::Mat;
pub use svd::{svd, Svd};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error(
        "kron_apply shape mismatch: A is {a_rows}x{a_cols}, B is {b_rows}x{b_cols}, \
         C has {c_blocks} blocks of {c_block_rows} rows; need c_blocks = {a_cols} and \
         block_rows = {b_cols}"
    )]
    KronShape {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
        c_blocks: usize,
        c_block_rows: usize,
    },
    #[error("kron_vec_right shape mismatch: A has {a_cols} columns but B has {b_rows} rows")]
    KronVecShape { a_cols: usize, b_rows: usize },
    #[error("blocked matrix: {rows} rows are not divisible by block_rows = {block_rows}")]
    BlockShape { rows: usize, block_rows: usize },
    #[error("matrix is {rows}x{cols}, not square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix not symmetric: max |M - Mᵀ| = {max_asym:.3e} exceeds the relative tolerance")]
    NotSymmetric { max_asym: f64 },
    #[error("matrix not positive definite after jitter retry: smallest pivot {smallest_pivot:.6e}")]
    Singular { smallest_pivot: f64 },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("spd_solve: matrix dim {dim} does not match rhs rows {rhs_rows}")]
    SolveShape { dim: usize, rhs_rows: usize },
}

/// A real matrix interpreted as `n` vertically stacked `block_rows × cols`
/// blocks — the right-hand operand of [`kron_apply`].
#[derive(Clone, Debug)]
pub struct BlockedMatrix {
    mat: Mat,
    block_rows: usize,
}

impl BlockedMatrix {
    /// Wrap `mat` with the given block height. The row count must be an exact
    /// multiple of `block_rows` and every entry finite.
    pub fn new(mat: Mat, block_rows: usize) -> Result<Self, LinalgError> {
        if block_rows == 0 || mat.rows() % block_rows != 0 {
            return Err(LinalgError::BlockShape { rows: mat.rows(), block_rows });
        }
        if let Some((row, col)) = mat.first_non_finite() {
            return Err(LinalgError::NonFinite { row, col });
        }
        Ok(BlockedMatrix { mat, block_rows })
    }

    /// Blocked view of a flat vector (single-column matrix).
    pub fn from_slice(v: &[f64], block_rows: usize) -> Result<Self, LinalgError> {
        Self::new(Mat::col_vec(v), block_rows)
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn n_blocks(&self) -> usize {
        self.mat.rows() / self.block_rows
    }

    pub fn rows(&self) -> usize {
        self.mat.rows()
    }

    pub fn cols(&self) -> usize {
        self.mat.cols()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    pub fn into_mat(self) -> Mat {
        self.mat
    }

    /// Row `local_row` of block `j`, as a contiguous slice.
    #[inline]
    fn block_row(&self, j: usize, local_row: usize) -> &[f64] {
        self.mat.row(j * self.block_rows + local_row)
    }
}

/// Apply `A ⊗ B` to `C` in blocked form, never materializing the product.
///
/// `A` is `m × n`, `B` is `p × q`, and `C` must carry `n` blocks of `q` rows.
/// Returns the `(m·p) × r` result. Zero entries of `A` are skipped, so
/// structurally sparse `A` (identity, selection) costs proportionally less;
/// the instrumented flop count is bounded by `2(mnqr + mpqr)` either way.
pub fn kron_apply(a: &Mat, b: &Mat, c: &BlockedMatrix) -> Result<Mat, LinalgError> {
    let (m, n) = (a.rows(), a.cols());
    let (p, q) = (b.rows(), b.cols());
    if c.block_rows() != q || c.n_blocks() != n {
        return Err(LinalgError::KronShape {
            a_rows: m,
            a_cols: n,
            b_rows: p,
            b_cols: q,
            c_blocks: c.n_blocks(),
            c_block_rows: c.block_rows(),
        });
    }
    let r = c.cols();
    let mut out = Mat::zeros(m * p, r);
    let mut acc = Mat::zeros(q, r);
    for i in 0..m {
        // acc = Σ_j a_ij · C_j
        acc.fill(0.0);
        for j in 0..n {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for lr in 0..q {
                let src = c.block_row(j, lr);
                let dst = acc.row_mut(lr);
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += aij * s;
                }
            }
            flops::add(2 * (q * r) as u64);
        }
        // out block i = B · acc
        for bi in 0..p {
            let brow = b.row(bi);
            let orow = out.row_mut(i * p + bi);
            for (t, &bv) in brow.iter().enumerate() {
                if bv == 0.0 {
                    continue;
                }
                let arow = acc.row(t);
                for (o, s) in orow.iter_mut().zip(arow) {
                    *o += bv * s;
                }
            }
        }
        flops::add(2 * (p * q * r) as u64);
    }
    Ok(out)
}

/// `(A ⊗ c) B` via the mixed-product identity `(A B) ⊗ c`.
///
/// `A` is `m × n`, `c` a length-`p` column, `B` is `n × r`; the result is
/// `(m·p) × r`, with row block `i` equal to `c · (A B)_{i,·}`.
pub fn kron_vec_right(a: &Mat, c: &[f64], b: &Mat) -> Result<Mat, LinalgError> {
    if a.cols() != b.rows() {
        return Err(LinalgError::KronVecShape { a_cols: a.cols(), b_rows: b.rows() });
    }
    let ab = a.matmul(b);
    flops::add(2 * (a.rows() * a.cols() * b.cols()) as u64);
    let p = c.len();
    let r = ab.cols();
    let mut out = Mat::zeros(a.rows() * p, r);
    for i in 0..a.rows() {
        let src = ab.row(i);
        for (u, &cu) in c.iter().enumerate() {
            let dst = out.row_mut(i * p + u);
            for (d, s) in dst.iter_mut().zip(src) {
                *d = cu * s;
            }
        }
    }
    flops::add((a.rows() * p * r) as u64);
    Ok(out)
}

/// Solve `M X = rhs` for symmetric positive-definite `M` under the jitter
/// policy: one retry with `1e-8 · mean(diag)` added to the diagonal, then a
/// [`LinalgError::Singular`] carrying the smallest pivot.
pub fn spd_solve(m: &Mat, rhs: &Mat) -> Result<Mat, LinalgError> {
    if m.rows() != rhs.rows() {
        return Err(LinalgError::SolveShape { dim: m.rows(), rhs_rows: rhs.rows() });
    }
    Ok(factor_spd(m)?.solve(rhs))
}
