//! Synthetic data generation from known parameter values.
//!
//! Draw order is fixed and documented so the same seed always yields the
//! same dataset: (1) remote field columns in time order (skipped when the
//! field is supplied), (2) the teleconnection coefficients `α̃*` as one
//! vector (skipped when `σ²_α = 0`), (3) non-intercept design columns in
//! time order (skipped for intercept-only designs), (4) local noise columns
//! in time order.

use super::{mean_columns, Dataset, GridSeries, ModelError, ModelState};
use crate::covkernels::{build_local_cov, matern_matrix, Location, MaternParams};
use crate::kronlinalg::{factor_spd, kron_apply, BlockedMatrix, Mat};
use crate::reducedrank::ReducedRankBasis;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

/// How the remote covariate field is produced.
#[derive(Clone, Debug)]
pub enum RemoteFieldRule {
    /// Draw each time column as a mean-zero Matérn field over the remote grid.
    MaternDraw(MaternParams),
    /// Use the given `n_r × n_t` values verbatim (no randomness consumed).
    Fixed(Mat),
}

/// How the local design matrices are produced.
#[derive(Clone, Debug)]
pub enum LocalDesignRule {
    /// `p = 1`: a single intercept column of ones.
    InterceptOnly,
    /// `p = 2`: intercept plus one iid standard-normal covariate column.
    InterceptPlusIidNormal,
    /// `p = 2`: intercept plus a covariate drawn per time as a mean-zero
    /// Matérn field over the response locations.
    InterceptPlusSmoothField(MaternParams),
}

impl LocalDesignRule {
    fn p(&self) -> usize {
        match self {
            LocalDesignRule::InterceptOnly => 1,
            _ => 2,
        }
    }
}

/// Scenario description for [`simulate`].
#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub n_t: usize,
    pub remote_field: RemoteFieldRule,
    pub design: LocalDesignRule,
    pub seed: u64,
}

/// A simulated dataset plus the latent quantities that generated it.
#[derive(Clone, Debug)]
pub struct Simulated {
    pub dataset: Dataset,
    /// The drawn teleconnection coefficients, `n_s · k`, knot-major per
    /// location (all zeros when `σ²_α = 0`).
    pub alpha_star: Vec<f64>,
    /// Induced covariates `Z*` (`k × n_t`) for the simulation's knots.
    pub zstar: Mat,
}

fn standard_normals(rng: &mut ChaCha20Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Generate a dataset from `truth` over the given geometry.
///
/// `σ²_α = 0` is accepted here (and only here) to produce data with no
/// teleconnection signal; every other parameter must be strictly positive.
pub fn simulate(
    truth: &ModelState,
    locations: &[Location],
    remote_locations: &[Location],
    knots: &[Location],
    cfg: &SimulationConfig,
) -> Result<Simulated, ModelError> {
    let n_s = locations.len();
    let n_r = remote_locations.len();
    let k = knots.len();
    if n_s == 0 || n_r == 0 || k == 0 || cfg.n_t == 0 {
        return Err(ModelError::Shape(format!(
            "degenerate geometry: n_s={n_s}, n_r={n_r}, k={k}, n_t={}",
            cfg.n_t
        )));
    }
    if truth.beta.len() != cfg.design.p() {
        return Err(ModelError::Shape(format!(
            "beta has {} entries, design rule implies p = {}",
            truth.beta.len(),
            cfg.design.p()
        )));
    }
    for (what, value) in [
        ("sigma2_w", truth.sigma2_w),
        ("nugget_ratio", truth.nugget_ratio),
        ("rho_w", truth.rho_w),
        ("rho_alpha", truth.rho_alpha),
        ("nu_w", truth.nu_w),
        ("nu_alpha", truth.nu_alpha),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(ModelError::BadParam { what, value });
        }
    }
    if !(truth.sigma2_alpha.is_finite() && truth.sigma2_alpha >= 0.0) {
        return Err(ModelError::BadParam { what: "sigma2_alpha", value: truth.sigma2_alpha });
    }

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);

    // (1) Remote covariate field, one column per time.
    let remote_values = match &cfg.remote_field {
        RemoteFieldRule::MaternDraw(p) => {
            p.validate()?;
            let dist = crate::covkernels::distance_matrix(remote_locations);
            let chol = factor_spd(&matern_matrix(&dist, p))?;
            let mut z = Mat::zeros(n_r, cfg.n_t);
            for t in 0..cfg.n_t {
                let col = chol.lower().matvec(&standard_normals(&mut rng, n_r));
                z.set_col(t, &col);
            }
            z
        }
        RemoteFieldRule::Fixed(m) => {
            if m.rows() != n_r || m.cols() != cfg.n_t {
                return Err(ModelError::Shape(format!(
                    "fixed remote field is {}x{}, expected {n_r}x{}",
                    m.rows(),
                    m.cols(),
                    cfg.n_t
                )));
            }
            m.clone()
        }
    };
    let remote = GridSeries::new(remote_locations.to_vec(), remote_values)?;

    // Induced covariates are invariant to the remote variance (both R* and
    // c* scale by σ²_α), so a unit-variance kernel serves when σ²_α = 0.
    let basis_sigma2 = if truth.sigma2_alpha > 0.0 { truth.sigma2_alpha } else { 1.0 };
    let basis = ReducedRankBasis::build(
        &remote,
        knots,
        &MaternParams::new(basis_sigma2, truth.rho_alpha, truth.nu_alpha)?,
    )?;

    let sigma = build_local_cov(locations, &truth.local_cov_params());
    let sigma_chol = factor_spd(&sigma)?;

    // (2) Teleconnection coefficients α̃* ~ N(0, Σ ⊗ R*).
    let alpha_star = if truth.sigma2_alpha > 0.0 {
        let rstar_chol = factor_spd(&basis.rstar)?;
        let z = standard_normals(&mut rng, n_s * k);
        let blocked = BlockedMatrix::from_slice(&z, k)?;
        kron_apply(sigma_chol.lower(), rstar_chol.lower(), &blocked)?.into_vec()
    } else {
        vec![0.0; n_s * k]
    };

    // (3) Local design matrices.
    let local_design: Vec<Mat> = match &cfg.design {
        LocalDesignRule::InterceptOnly => vec![Mat::from_fn(n_s, 1, |_, _| 1.0); cfg.n_t],
        LocalDesignRule::InterceptPlusIidNormal => (0..cfg.n_t)
            .map(|_| {
                let col = standard_normals(&mut rng, n_s);
                Mat::from_fn(n_s, 2, |i, j| if j == 0 { 1.0 } else { col[i] })
            })
            .collect(),
        LocalDesignRule::InterceptPlusSmoothField(p) => {
            p.validate()?;
            let dist = crate::covkernels::distance_matrix(locations);
            let chol = factor_spd(&matern_matrix(&dist, p))?;
            (0..cfg.n_t)
                .map(|_| {
                    let col = chol.lower().matvec(&standard_normals(&mut rng, n_s));
                    Mat::from_fn(n_s, 2, |i, j| if j == 0 { 1.0 } else { col[i] })
                })
                .collect()
        }
    };

    // (4) Local noise: Y_t = X_t β + (I ⊗ z*_tᵀ) α̃* + L_Σ η_t.
    let mu = mean_columns(&local_design, &truth.beta, &basis.zstar, &alpha_star)?;
    let mut y = Mat::zeros(n_s, cfg.n_t);
    for t in 0..cfg.n_t {
        let noise = sigma_chol.lower().matvec(&standard_normals(&mut rng, n_s));
        for i in 0..n_s {
            y[(i, t)] = mu[(i, t)] + noise[i];
        }
    }

    let response = GridSeries::new(locations.to_vec(), y)?;
    let time_index = (0..cfg.n_t).map(|t| format!("t{t}")).collect();
    let dataset = Dataset::new(response, local_design, remote, time_index)?;
    Ok(Simulated { dataset, alpha_star, zstar: basis.zstar })
}
