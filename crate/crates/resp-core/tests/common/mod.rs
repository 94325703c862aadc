//! Shared oracles for the acceptance suite: naive Kronecker products,
//! dense Gaussian densities and conditioning, and order-statistic helpers.
//! Everything here materializes the quantities the library is built to
//! avoid materializing, so agreement is evidence and not tautology.

use resp_core::covkernels::Location;
use resp_core::reducedrank::ReducedRankBasis;
use resp_core::Mat;

/// Dense Kronecker product `A ⊗ B`.
pub fn dense_kron(a: &Mat, b: &Mat) -> Mat {
    let (m, n) = (a.rows(), a.cols());
    let (p, q) = (b.rows(), b.cols());
    let mut out = Mat::zeros(m * p, n * q);
    for i in 0..m {
        for j in 0..n {
            for r in 0..p {
                for c in 0..q {
                    out[(i * p + r, j * q + c)] = a[(i, j)] * b[(r, c)];
                }
            }
        }
    }
    out
}

/// Plain dense Cholesky: returns the lower factor. Panics on a
/// non-positive pivot — oracle inputs are meant to be SPD by construction.
pub fn dense_chol(m: &Mat) -> Mat {
    let n = m.rows();
    assert_eq!(n, m.cols(), "cholesky of a non-square matrix");
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for t in 0..j {
            d -= l[(j, t)] * l[(j, t)];
        }
        assert!(d > 0.0, "non-SPD oracle matrix: pivot {d} at {j}");
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
    l
}

/// Solve `L Lᵀ x = b` given the lower factor.
pub fn chol_solve_vec(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= l[(i, k)] * x[k];
        }
        x[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            x[i] -= l[(k, i)] * x[k];
        }
        x[i] /= l[(i, i)];
    }
    x
}

/// Dense multivariate-normal log density of a zero-mean residual.
pub fn mvn_logpdf(resid: &[f64], cov: &Mat) -> f64 {
    let n = resid.len();
    let l = dense_chol(cov);
    let mut logdet = 0.0;
    for i in 0..n {
        logdet += 2.0 * l[(i, i)].ln();
    }
    let sol = chol_solve_vec(&l, resid);
    let quad: f64 = resid.iter().zip(&sol).map(|(r, s)| r * s).sum();
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
}

/// Materialized marginal covariance of the stacked response, time-major:
/// `cov(Y_{it}, Y_{jt'}) = (δ_{tt'} + z*_tᵀ R* z*_{t'}) Σ_{ij}`.
pub fn marginal_dense_cov(sigma: &Mat, basis: &ReducedRankBasis) -> Mat {
    let n_s = sigma.rows();
    let n_t = basis.n_t();
    let k = basis.k();
    let mut out = Mat::zeros(n_s * n_t, n_s * n_t);
    for t in 0..n_t {
        for u in 0..n_t {
            let mut w = 0.0;
            for a in 0..k {
                for b in 0..k {
                    w += basis.zstar[(a, t)] * basis.rstar[(a, b)] * basis.zstar[(b, u)];
                }
            }
            if t == u {
                w += 1.0;
            }
            for i in 0..n_s {
                for j in 0..n_s {
                    out[(t * n_s + i, u * n_s + j)] = w * sigma[(i, j)];
                }
            }
        }
    }
    out
}

/// Dense joint-Gaussian conditioning of the teleconnection coefficients
/// on the observed residuals. Coefficients are location-major blocks of
/// `k` (index `i·k + l`), residuals time-major. Returns the conditional
/// mean and covariance computed with none of the Kronecker structure.
pub fn dense_conditional(
    sigma: &Mat,
    basis: &ReducedRankBasis,
    resid_time_major: &[f64],
) -> (Vec<f64>, Mat) {
    let n_s = sigma.rows();
    let n_t = basis.n_t();
    let k = basis.k();
    let da = n_s * k;
    let dy = n_s * n_t;
    assert_eq!(resid_time_major.len(), dy);

    // cov(α) = Σ ⊗ R*.
    let c_aa = dense_kron(sigma, &basis.rstar);
    // cov(α_{il}, Y_{jt}) = Σ_{ij} (R* z*_t)_l.
    let rz = basis.rstar.matmul(&basis.zstar); // k × n_t
    let mut c_ay = Mat::zeros(da, dy);
    for i in 0..n_s {
        for l in 0..k {
            for j in 0..n_s {
                for t in 0..n_t {
                    c_ay[(i * k + l, t * n_s + j)] = sigma[(i, j)] * rz[(l, t)];
                }
            }
        }
    }
    let c_yy = marginal_dense_cov(sigma, basis);

    let l = dense_chol(&c_yy);
    // mean = C_αY C_YY⁻¹ r ; cov = C_αα − C_αY C_YY⁻¹ C_Yα.
    let w = chol_solve_vec(&l, resid_time_major);
    let mean: Vec<f64> = (0..da)
        .map(|r| (0..dy).map(|c| c_ay[(r, c)] * w[c]).sum())
        .collect();
    let mut cov = c_aa;
    for r in 0..da {
        let row: Vec<f64> = (0..dy).map(|c| c_ay[(r, c)]).collect();
        let s = chol_solve_vec(&l, &row);
        for r2 in 0..da {
            let dot: f64 = (0..dy).map(|c| c_ay[(r2, c)] * s[c]).sum();
            cov[(r, r2)] -= dot;
        }
    }
    (mean, cov)
}

/// One-sample Kolmogorov–Smirnov distance against an exact CDF.
pub fn ks_one_sample(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(|a, b| a.partial_cmp(b).expect("finite sample"));
    let n = sample.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sample.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

/// Shortest interval containing a `mass` fraction of the draws (the
/// sliding-window HPD estimate on sorted samples).
pub fn hpd_interval(draws: &[f64], mass: f64) -> (f64, f64) {
    assert!(!draws.is_empty() && (0.0..1.0).contains(&mass));
    let mut sorted = draws.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    let n = sorted.len();
    let window = ((mass * n as f64).ceil() as usize).clamp(1, n);
    let mut best = (sorted[0], sorted[n - 1]);
    let mut width = f64::INFINITY;
    for start in 0..=(n - window) {
        let w = sorted[start + window - 1] - sorted[start];
        if w < width {
            width = w;
            best = (sorted[start], sorted[start + window - 1]);
        }
    }
    best
}

/// Rectangular lon/lat grid of `n` sites, `per_row` per latitude band.
pub fn grid_locs(n: usize, per_row: usize, lon0: f64, lat0: f64, step: f64) -> Vec<Location> {
    (0..n)
        .map(|i| Location {
            lon: lon0 + step * (i % per_row) as f64,
            lat: lat0 + step * (i / per_row) as f64,
        })
        .collect()
}

/// Largest absolute entry difference between two equally-shaped matrices.
pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    let mut d: f64 = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            d = d.max((a[(i, j)] - b[(i, j)]).abs());
        }
    }
    d
}
