//! Model data containers, the marginalized likelihood, and simulation.
//!
//! With the remote coefficients integrated out, the stacked response is one
//! Gaussian:
//!
//! ```text
//! Y ~ N( X̃ (1 ⊗ β),  C⁻¹ ⊗ Σ ),      C⁻¹ = I_{n_t} + Z*ᵀ R* Z*
//! ```
//!
//! where `Σ` is the `n_s × n_s` local covariance (Matérn plus nugget) and
//! `C⁻¹` is `n_t × n_t`. Determinants and quadratic forms split along the
//! Kronecker factors, so a likelihood evaluation factors two small matrices
//! instead of one `n_s·n_t` square one. The nugget is parameter-expanded:
//! `σ²_ε = σ²_w · σ̃²_ε`, and only the ratio `σ̃²_ε` is sampled.

mod simulate;

pub use simulate::{simulate, LocalDesignRule, RemoteFieldRule, Simulated, SimulationConfig};

use crate::covkernels::{
    build_local_cov, KernelError, LocalCovParams, Location, MaternParams,
};
use crate::kronlinalg::{
    factor_spd, kron_apply, BlockedMatrix, CholeskyFactor, LinalgError, Mat,
};
use crate::reducedrank::{RankError, ReducedRankBasis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("log-likelihood is non-finite (term: {term})")]
    NonFiniteLogLik { term: &'static str },
    #[error("invalid parameter: {what} = {value}")]
    BadParam { what: &'static str, value: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Rank(#[from] RankError),
}

/// Spatial locations plus a time-indexed value matrix (`n_loc × n_t`), the
/// carrier for both the response field and the remote covariate field.
#[derive(Clone, Debug)]
pub struct GridSeries {
    locations: Vec<Location>,
    values: Mat,
}

impl GridSeries {
    pub fn new(locations: Vec<Location>, values: Mat) -> Result<Self, ModelError> {
        if values.rows() != locations.len() {
            return Err(ModelError::Shape(format!(
                "{} locations but {} value rows",
                locations.len(),
                values.rows()
            )));
        }
        if let Some((r, c)) = values.first_non_finite() {
            return Err(ModelError::NonFinite(format!("series value at ({r}, {c})")));
        }
        Ok(GridSeries { locations, values })
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn values(&self) -> &Mat {
        &self.values
    }

    pub fn n_locations(&self) -> usize {
        self.locations.len()
    }

    pub fn n_times(&self) -> usize {
        self.values.cols()
    }

    /// The series restricted to a subset of time columns (order preserved).
    pub fn select_times(&self, keep: &[usize]) -> GridSeries {
        let mut values = Mat::zeros(self.n_locations(), keep.len());
        for (dst, &src) in keep.iter().enumerate() {
            for i in 0..self.n_locations() {
                values[(i, dst)] = self.values[(i, src)];
            }
        }
        GridSeries { locations: self.locations.clone(), values }
    }
}

/// A complete model dataset: response field, per-time local design matrices,
/// remote covariate field, and time labels.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub response: GridSeries,
    /// One `n_s × p` design matrix per time (intercept column included).
    pub local_design: Vec<Mat>,
    pub remote: GridSeries,
    pub time_index: Vec<String>,
}

impl Dataset {
    pub fn new(
        response: GridSeries,
        local_design: Vec<Mat>,
        remote: GridSeries,
        time_index: Vec<String>,
    ) -> Result<Self, ModelError> {
        let n_t = response.n_times();
        let n_s = response.n_locations();
        if local_design.len() != n_t {
            return Err(ModelError::Shape(format!(
                "{} design matrices for {} times",
                local_design.len(),
                n_t
            )));
        }
        if remote.n_times() != n_t {
            return Err(ModelError::Shape(format!(
                "remote series has {} times, response has {}",
                remote.n_times(),
                n_t
            )));
        }
        if time_index.len() != n_t {
            return Err(ModelError::Shape(format!(
                "{} time labels for {} times",
                time_index.len(),
                n_t
            )));
        }
        let p = local_design.first().map(|x| x.cols()).unwrap_or(0);
        if p == 0 {
            return Err(ModelError::Shape("empty local design".into()));
        }
        for (t, x) in local_design.iter().enumerate() {
            if x.rows() != n_s || x.cols() != p {
                return Err(ModelError::Shape(format!(
                    "design at time {t} is {}x{}, expected {n_s}x{p}",
                    x.rows(),
                    x.cols()
                )));
            }
            if let Some((r, c)) = x.first_non_finite() {
                return Err(ModelError::NonFinite(format!("design at time {t}, entry ({r}, {c})")));
            }
        }
        Ok(Dataset { response, local_design, remote, time_index })
    }

    pub fn n_s(&self) -> usize {
        self.response.n_locations()
    }

    pub fn n_t(&self) -> usize {
        self.response.n_times()
    }

    pub fn n_r(&self) -> usize {
        self.remote.n_locations()
    }

    /// Width of the local design (intercept included).
    pub fn p(&self) -> usize {
        self.local_design[0].cols()
    }

    /// Residual matrix `E` (`n_s × n_t`) with columns `Y_t − X_t β`.
    pub fn residual_matrix(&self, beta: &[f64]) -> Mat {
        let mut e = Mat::zeros(self.n_s(), self.n_t());
        for t in 0..self.n_t() {
            let xb = self.local_design[t].matvec(beta);
            for i in 0..self.n_s() {
                e[(i, t)] = self.response.values()[(i, t)] - xb[i];
            }
        }
        e
    }

    /// The dataset restricted to a subset of time columns (order preserved).
    pub fn select_times(&self, keep: &[usize]) -> Dataset {
        Dataset {
            response: self.response.select_times(keep),
            local_design: keep.iter().map(|&t| self.local_design[t].clone()).collect(),
            remote: self.remote.select_times(keep),
            time_index: keep.iter().map(|&t| self.time_index[t].clone()).collect(),
        }
    }
}

/// Current values of every sampled (or fixed) model parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub beta: Vec<f64>,
    /// Local Matérn marginal variance `σ²_w`.
    pub sigma2_w: f64,
    /// Parameter-expanded nugget ratio `σ̃²_ε`; the nugget is `σ²_w · σ̃²_ε`.
    pub nugget_ratio: f64,
    /// Remote (teleconnection) kernel variance `σ²_α`.
    pub sigma2_alpha: f64,
    /// Local Matérn range, km.
    pub rho_w: f64,
    /// Remote Matérn range, km.
    pub rho_alpha: f64,
    /// Fixed local smoothness.
    pub nu_w: f64,
    /// Fixed remote smoothness.
    pub nu_alpha: f64,
}

impl ModelState {
    /// Local covariance parameters with the expanded nugget `σ²_w · σ̃²_ε`.
    pub fn local_cov_params(&self) -> LocalCovParams {
        LocalCovParams {
            matern: MaternParams { sigma2: self.sigma2_w, rho: self.rho_w, nu: self.nu_w },
            nugget_sigma2: self.sigma2_w * self.nugget_ratio,
        }
    }

    /// Remote kernel parameters `θ_α`.
    pub fn remote_params(&self) -> MaternParams {
        MaternParams { sigma2: self.sigma2_alpha, rho: self.rho_alpha, nu: self.nu_alpha }
    }

    /// Every variance/range entry strictly positive and finite (sampler precondition).
    pub fn validate_positive(&self) -> Result<(), ModelError> {
        for (what, value) in [
            ("sigma2_w", self.sigma2_w),
            ("nugget_ratio", self.nugget_ratio),
            ("sigma2_alpha", self.sigma2_alpha),
            ("rho_w", self.rho_w),
            ("rho_alpha", self.rho_alpha),
            ("nu_w", self.nu_w),
            ("nu_alpha", self.nu_alpha),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::BadParam { what, value });
            }
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(ModelError::BadParam { what: "beta", value: f64::NAN });
        }
        Ok(())
    }
}

/// Prior specification. Defaults follow the applied configuration the model
/// was developed for: diffuse normal on `β`, IG(2, 1) on `σ²_w` and the
/// nugget ratio, IG(6, 10) on `σ²_α`, and wide uniform ranges (km).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Priors {
    /// Gaussian prior covariance `Λ` for `β` (positive definite).
    pub beta_cov: Mat,
    /// Inverse-gamma (shape, rate) on `σ²_w`.
    pub ig_w: (f64, f64),
    /// Inverse-gamma (shape, rate) on the nugget ratio `σ̃²_ε`.
    pub ig_eps: (f64, f64),
    /// Inverse-gamma (shape, rate) on `σ²_α`.
    pub ig_alpha: (f64, f64),
    /// Uniform support for `ρ_w`, km.
    pub rho_w_bounds: (f64, f64),
    /// Uniform support for `ρ_α`, km.
    pub rho_alpha_bounds: (f64, f64),
}

impl Priors {
    /// Defaults for a `p`-column local design: `β ~ N(0, 10 I_p)`.
    pub fn default_for(p: usize) -> Priors {
        Priors {
            beta_cov: Mat::identity(p).scale(10.0),
            ig_w: (2.0, 1.0),
            ig_eps: (2.0, 1.0),
            ig_alpha: (6.0, 10.0),
            rho_w_bounds: (1.0, 600.0),
            rho_alpha_bounds: (1.0, 2000.0),
        }
    }

    pub fn validate(&self, p: usize) -> Result<(), ModelError> {
        if self.beta_cov.rows() != p || self.beta_cov.cols() != p {
            return Err(ModelError::Shape(format!(
                "beta prior covariance is {}x{}, design width is {p}",
                self.beta_cov.rows(),
                self.beta_cov.cols()
            )));
        }
        factor_spd(&self.beta_cov)?;
        for (what, &(a, b)) in [
            ("ig_w", &self.ig_w),
            ("ig_eps", &self.ig_eps),
            ("ig_alpha", &self.ig_alpha),
        ] {
            if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
                return Err(ModelError::BadParam { what, value: if a > 0.0 { b } else { a } });
            }
        }
        for (what, &(lo, hi)) in
            [("rho_w_bounds", &self.rho_w_bounds), ("rho_alpha_bounds", &self.rho_alpha_bounds)]
        {
            if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                return Err(ModelError::BadParam { what, value: lo });
            }
        }
        Ok(())
    }
}

/// Mean columns `X_t β + (I ⊗ z*_tᵀ) α̃*` as an `n_s × n_t` matrix.
/// The teleconnection term goes through the blocked Kronecker path.
pub(crate) fn mean_columns(
    local_design: &[Mat],
    beta: &[f64],
    zstar: &Mat,
    alpha_star: &[f64],
) -> Result<Mat, ModelError> {
    let n_t = local_design.len();
    let n_s = local_design.first().map(|x| x.rows()).unwrap_or(0);
    let k = zstar.rows();
    if alpha_star.len() != n_s * k {
        return Err(ModelError::Shape(format!(
            "alpha_star has {} entries, expected n_s·k = {}",
            alpha_star.len(),
            n_s * k
        )));
    }
    let alpha = BlockedMatrix::from_slice(alpha_star, k)?;
    let eye = Mat::identity(n_s);
    let mut mu = Mat::zeros(n_s, n_t);
    for t in 0..n_t {
        let xb = local_design[t].matvec(beta);
        let zt = Mat::from_fn(1, k, |_, l| zstar[(l, t)]);
        let tele = kron_apply(&eye, &zt, &alpha)?;
        for i in 0..n_s {
            mu[(i, t)] = xb[i] + tele.as_slice()[i];
        }
    }
    Ok(mu)
}

/// Full mean vector `X̃(1 ⊗ β) + Z̃*(1 ⊗ α̃*)`, stacked time-major
/// (`n_s · n_t`, block `t` holding time `t`).
pub fn assemble_mean(
    data: &Dataset,
    beta: &[f64],
    basis: &ReducedRankBasis,
    alpha_star: &[f64],
) -> Result<Vec<f64>, ModelError> {
    if beta.len() != data.p() {
        return Err(ModelError::Shape(format!(
            "beta has {} entries, design width is {}",
            beta.len(),
            data.p()
        )));
    }
    if basis.zstar.cols() != data.n_t() {
        return Err(ModelError::Shape(format!(
            "induced covariates cover {} times, dataset has {}",
            basis.zstar.cols(),
            data.n_t()
        )));
    }
    let mu = mean_columns(&data.local_design, beta, &basis.zstar, alpha_star)?;
    let mut out = Vec::with_capacity(data.n_s() * data.n_t());
    for t in 0..data.n_t() {
        for i in 0..data.n_s() {
            out.push(mu[(i, t)]);
        }
    }
    Ok(out)
}

/// The temporal covariance factor `C⁻¹ = I + Z*ᵀ R* Z*` (`n_t × n_t`).
pub fn temporal_factor(basis: &ReducedRankBasis) -> Mat {
    let rz = basis.rstar.matmul(&basis.zstar);
    let mut cinv = basis.zstar.tr_matmul(&rz);
    cinv.add_diag(1.0);
    cinv
}

/// Marginal log-likelihood evaluated from pre-factored Kronecker pieces.
///
/// `sigma_chol` factors the local covariance `Σ`, `cinv_chol` factors the
/// temporal `C⁻¹`; residuals come from `data` and `beta`. This is the hot
/// path the sampler calls; [`marginal_loglik`] wraps it with fresh factors.
pub fn marginal_loglik_factored(
    data: &Dataset,
    beta: &[f64],
    sigma_chol: &CholeskyFactor,
    cinv_chol: &CholeskyFactor,
) -> Result<f64, ModelError> {
    let n_s = data.n_s() as f64;
    let n_t = data.n_t() as f64;
    let e = data.residual_matrix(beta);
    let s = sigma_chol.solve(&e); // Σ⁻¹ E
    let q = e.tr_matmul(&s); // Q = Eᵀ Σ⁻¹ E  (n_t × n_t)
    let quad = cinv_chol.solve(&q).trace(); // tr(C Q) with C = (C⁻¹)⁻¹
    let logdet_sigma = sigma_chol.logdet();
    let logdet_cinv = cinv_chol.logdet();
    let ll = -0.5 * (n_s * n_t * LN_2PI + n_s * logdet_cinv + n_t * logdet_sigma + quad);
    if !ll.is_finite() {
        let term = if !quad.is_finite() {
            "quadratic form"
        } else if !logdet_sigma.is_finite() {
            "log|Sigma|"
        } else {
            "log|Cinv|"
        };
        return Err(ModelError::NonFiniteLogLik { term });
    }
    Ok(ll)
}

/// Marginal log-likelihood of the dataset under `state`, with the remote
/// coefficients integrated out. Never materializes `C⁻¹ ⊗ Σ`.
pub fn marginal_loglik(
    data: &Dataset,
    state: &ModelState,
    basis: &ReducedRankBasis,
) -> Result<f64, ModelError> {
    if state.beta.len() != data.p() {
        return Err(ModelError::Shape(format!(
            "beta has {} entries, design width is {}",
            state.beta.len(),
            data.p()
        )));
    }
    if basis.zstar.cols() != data.n_t() {
        return Err(ModelError::Shape(format!(
            "induced covariates cover {} times, dataset has {}",
            basis.zstar.cols(),
            data.n_t()
        )));
    }
    let sigma = build_local_cov(data.response.locations(), &state.local_cov_params());
    let sigma_chol = factor_spd(&sigma)?;
    let cinv_chol = factor_spd(&temporal_factor(basis))?;
    marginal_loglik_factored(data, &state.beta, &sigma_chol, &cinv_chol)
}
