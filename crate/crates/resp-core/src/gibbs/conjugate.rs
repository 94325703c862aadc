//! Conjugate full-conditional updates: regression coefficients and the
//! expanded local variance.

use crate::kronlinalg::{factor_spd, CholeskyFactor, LinalgError, Mat};
use crate::resplike::Dataset;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

/// Gaussian full conditional for `β`: precision
/// `P = Λ⁻¹ + Σ_{tt'} C_{tt'} X_tᵀ Σ⁻¹ X_{t'}` and linear term
/// `b = Σ_{tt'} C_{tt'} X_tᵀ Σ⁻¹ Y_{t'}`, assembled per time pair without
/// materializing the `n_s n_t` marginal covariance.
pub fn beta_conditional(
    data: &Dataset,
    prior_cov: &Mat,
    sigma_chol: &CholeskyFactor,
    cinv_chol: &CholeskyFactor,
) -> Result<(Mat, Vec<f64>), LinalgError> {
    let p = data.p();
    let n_t = data.n_t();
    let big_c = cinv_chol.inverse(); // C = (C⁻¹)⁻¹, n_t × n_t
    // Σ⁻¹ X_t once per time; Σ⁻¹ is symmetric so X_tᵀ Σ⁻¹ y = (Σ⁻¹X_t)ᵀ y.
    let u: Vec<Mat> = data.local_design.iter().map(|x| sigma_chol.solve(x)).collect();
    let mut prec = factor_spd(prior_cov)?.inverse();
    let mut lin = vec![0.0; p];
    for t in 0..n_t {
        for tp in 0..n_t {
            let w = big_c[(t, tp)];
            if w == 0.0 {
                continue;
            }
            let g = data.local_design[t].tr_matmul(&u[tp]);
            prec.add_scaled(w, &g);
            let y_tp = data.response.values().col(tp);
            let xty = u[t].transpose().matvec(&y_tp);
            for j in 0..p {
                lin[j] += w * xty[j];
            }
        }
    }
    Ok((prec, lin))
}

/// Draw `β | rest ~ N(P⁻¹ b, P⁻¹)` as `P⁻¹b + L⁻ᵀ z` with `P = L Lᵀ`.
pub fn update_beta(
    data: &Dataset,
    prior_cov: &Mat,
    sigma_chol: &CholeskyFactor,
    cinv_chol: &CholeskyFactor,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, LinalgError> {
    let (prec, lin) = beta_conditional(data, prior_cov, sigma_chol, cinv_chol)?;
    let chol = factor_spd(&prec)?;
    let mean = chol.solve_vec(&lin);
    let z: Vec<f64> = (0..lin.len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let dev = chol.solve_lt_vec(&z);
    Ok(mean.iter().zip(&dev).map(|(m, d)| m + d).collect())
}

/// Shape and rate of the inverse-gamma full conditional for `σ²_w`.
///
/// `sigma_tilde_chol` must factor the *unit-scale* local covariance
/// `Σ̃ = R_w + σ̃²_ε I`; the quadratic form is then
/// `tr(C · Eᵀ Σ̃⁻¹ E)`, free of `σ²_w` because the temporal factor carries
/// no local variance.
pub fn sigma2w_posterior(
    data: &Dataset,
    beta: &[f64],
    sigma_tilde_chol: &CholeskyFactor,
    cinv_chol: &CholeskyFactor,
    prior: (f64, f64),
) -> (f64, f64) {
    let e = data.residual_matrix(beta);
    let s = sigma_tilde_chol.solve(&e);
    let q = e.tr_matmul(&s);
    let quad = cinv_chol.solve(&q).trace();
    (prior.0 + 0.5 * (data.n_s() * data.n_t()) as f64, prior.1 + 0.5 * quad)
}

/// Draw from IG(shape, rate) as the reciprocal of a Gamma(shape, scale 1/rate)
/// draw.
pub fn draw_inverse_gamma(shape: f64, rate: f64, rng: &mut impl Rng) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("positive IG parameters").sample(rng);
    1.0 / g
}

/// Log density of IG(shape `a`, rate `b`) at `x`.
pub fn ln_ig_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    a * b.ln() - statrs::function::gamma::ln_gamma(a) - (a + 1.0) * x.ln() - b / x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covkernels::{build_local_cov, LocalCovParams, Location, MaternParams};
    use crate::resplike::GridSeries;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn loc(lon: f64, lat: f64) -> Location {
        Location::new(lon, lat).unwrap()
    }

    /// Dense Kronecker product, written naively as the oracle.
    fn kron_dense(a: &Mat, b: &Mat) -> Mat {
        let mut out = Mat::zeros(a.rows() * b.rows(), a.cols() * b.cols());
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                for k in 0..b.rows() {
                    for l in 0..b.cols() {
                        out[(i * b.rows() + k, j * b.cols() + l)] = a[(i, j)] * b[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// A small dataset with a non-trivial temporal factor.
    fn instance() -> (Dataset, Mat, Mat, Mat) {
        let locs = vec![loc(0.0, 0.0), loc(2.0, 0.0), loc(0.0, 3.0)];
        let n_t = 4;
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        let y = Mat::from_fn(3, n_t, |_, _| rng.sample::<f64, _>(StandardNormal));
        let designs: Vec<Mat> = (0..n_t)
            .map(|_| {
                Mat::from_fn(3, 2, |_, j| {
                    if j == 0 {
                        1.0
                    } else {
                        rng.sample::<f64, _>(StandardNormal)
                    }
                })
            })
            .collect();
        let remote = GridSeries::new(
            vec![loc(150.0, 0.0)],
            Mat::from_rows(&[&[0.9, -0.4, 0.2, 1.1]]),
        )
        .unwrap();
        let response = GridSeries::new(locs.clone(), y).unwrap();
        let labels = (0..n_t).map(|t| format!("t{t}")).collect();
        let data = Dataset::new(response, designs, remote, labels).unwrap();

        let sigma = build_local_cov(
            &locs,
            &LocalCovParams {
                matern: MaternParams::new(1.3, 250.0, 0.5).unwrap(),
                nugget_sigma2: 0.2,
            },
        );
        // C⁻¹ = I + σ²_α z zᵀ with z the remote row (one knot on the grid).
        let z = [0.9, -0.4, 0.2, 1.1];
        let mut cinv = Mat::from_fn(n_t, n_t, |t, u| 1.4 * z[t] * z[u]);
        cinv.add_diag(1.0);
        let prior_cov = Mat::identity(2).scale(10.0);
        (data, sigma, cinv, prior_cov)
    }

    /// Dense GLS assembly of the β full conditional, the long way around:
    /// stack X̃ and y, materialize V = C⁻¹ ⊗ Σ, and form
    /// P = Λ⁻¹ + X̃ᵀV⁻¹X̃, b = X̃ᵀV⁻¹y.
    fn dense_beta_conditional(data: &Dataset, sigma: &Mat, cinv: &Mat, prior_cov: &Mat) -> (Mat, Vec<f64>) {
        let (n_s, n_t, p) = (data.n_s(), data.n_t(), data.p());
        let n = n_s * n_t;
        let mut xs = Mat::zeros(n, p);
        let mut y = vec![0.0; n];
        for t in 0..n_t {
            for i in 0..n_s {
                for j in 0..p {
                    xs[(t * n_s + i, j)] = data.local_design[t][(i, j)];
                }
                y[t * n_s + i] = data.response.values()[(i, t)];
            }
        }
        let v = kron_dense(cinv, sigma);
        let v_chol = factor_spd(&v).unwrap();
        let vinv_x = v_chol.solve(&xs);
        let vinv_y = v_chol.solve_vec(&y);
        let mut prec = factor_spd(prior_cov).unwrap().inverse();
        let xtvx = xs.tr_matmul(&vinv_x);
        prec.add_scaled(1.0, &xtvx);
        let lin = xs.transpose().matvec(&vinv_y);
        (prec, lin)
    }

    #[test]
    fn beta_conditional_matches_dense_gls() {
        let (data, sigma, cinv, prior_cov) = instance();
        let sigma_chol = factor_spd(&sigma).unwrap();
        let cinv_chol = factor_spd(&cinv).unwrap();
        let (prec, lin) = beta_conditional(&data, &prior_cov, &sigma_chol, &cinv_chol).unwrap();
        let (prec_d, lin_d) = dense_beta_conditional(&data, &sigma, &cinv, &prior_cov);
        for i in 0..2 {
            assert_relative_eq!(lin[i], lin_d[i], max_relative = 1e-9);
            for j in 0..2 {
                assert_relative_eq!(prec[(i, j)], prec_d[(i, j)], max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn beta_draws_have_conditional_moments() {
        let (data, sigma, cinv, prior_cov) = instance();
        let sigma_chol = factor_spd(&sigma).unwrap();
        let cinv_chol = factor_spd(&cinv).unwrap();
        let (prec, lin) = beta_conditional(&data, &prior_cov, &sigma_chol, &cinv_chol).unwrap();
        let prec_chol = factor_spd(&prec).unwrap();
        let mean = prec_chol.solve_vec(&lin);
        let cov = prec_chol.inverse();

        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let n = 40_000usize;
        let mut m = [0.0f64; 2];
        let mut s = [[0.0f64; 2]; 2];
        for _ in 0..n {
            let b = update_beta(&data, &prior_cov, &sigma_chol, &cinv_chol, &mut rng).unwrap();
            for i in 0..2 {
                m[i] += b[i];
                for j in 0..2 {
                    s[i][j] += (b[i] - mean[i]) * (b[j] - mean[j]);
                }
            }
        }
        let nf = n as f64;
        for i in 0..2 {
            let se = (cov[(i, i)] / nf).sqrt();
            assert!((m[i] / nf - mean[i]).abs() < 4.0 * se, "mean[{i}]");
            for j in 0..2 {
                let got = s[i][j] / nf;
                let se = ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)] * cov[(i, j)]) / nf).sqrt();
                assert!((got - cov[(i, j)]).abs() < 4.0 * se, "cov[{i}][{j}]: {got} vs {}", cov[(i, j)]);
            }
        }
    }

    #[test]
    fn sigma2w_quadratic_form_matches_dense() {
        let (data, sigma, cinv, _) = instance();
        // Unit-scale Σ̃: here just reuse σ as the "unit" matrix — the test
        // probes the quadratic-form plumbing, not the scaling convention.
        let sigma_chol = factor_spd(&sigma).unwrap();
        let cinv_chol = factor_spd(&cinv).unwrap();
        let beta = [0.4, -0.2];
        let (shape, rate) = sigma2w_posterior(&data, &beta, &sigma_chol, &cinv_chol, (2.0, 1.0));
        assert_relative_eq!(shape, 2.0 + 0.5 * 12.0, max_relative = 1e-15);

        // Dense: quad = rᵀ (C⁻¹ ⊗ Σ̃)⁻¹ r with r the stacked residuals.
        let (n_s, n_t) = (data.n_s(), data.n_t());
        let e = data.residual_matrix(&beta);
        let mut r = vec![0.0; n_s * n_t];
        for t in 0..n_t {
            for i in 0..n_s {
                r[t * n_s + i] = e[(i, t)];
            }
        }
        let v = kron_dense(&cinv, &sigma);
        let vinv_r = factor_spd(&v).unwrap().solve_vec(&r);
        let quad: f64 = r.iter().zip(&vinv_r).map(|(a, b)| a * b).sum();
        assert_relative_eq!(rate, 1.0 + 0.5 * quad, max_relative = 1e-9);
    }

    #[test]
    fn inverse_gamma_draws_have_right_moments() {
        // IG(6, 10): mean 2, variance 1.
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let n = 200_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let x = draw_inverse_gamma(6.0, 10.0, &mut rng);
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!((mean - 2.0).abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn ig_log_density_matches_reference() {
        // statrs carries the same distribution under the (shape, rate)
        // parameterization; check a few points.
        use statrs::distribution::{Continuous, InverseGamma};
        let d = InverseGamma::new(6.0, 10.0).unwrap();
        for x in [0.2, 1.0, 2.0, 7.5] {
            assert_relative_eq!(ln_ig_pdf(x, 6.0, 10.0), d.ln_pdf(x), max_relative = 1e-12);
        }
        assert_eq!(ln_ig_pdf(-1.0, 6.0, 10.0), f64::NEG_INFINITY);
        assert_eq!(ln_ig_pdf(0.0, 6.0, 10.0), f64::NEG_INFINITY);
    }
}
