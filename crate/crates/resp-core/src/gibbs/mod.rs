//! Hybrid Gibbs / adaptive-Metropolis sampler for the marginalized model.
//!
//! One sweep updates, in order: `β` (conjugate Gaussian), `σ²_w` (conjugate
//! inverse-gamma, exact because the temporal factor carries no local
//! variance), then `ρ_w`, `σ̃²_ε`, `σ²_α`, `ρ_α` by adaptive random-walk
//! Metropolis on transformed scales. The remote coefficients stay integrated
//! out; composition sampling recovers them afterwards.
//!
//! Factor caching keeps a sweep cheap: the unit-variance local correlation is
//! rebuilt only when `ρ_w` moves, and the remote quadratic `Z*ᵀR̃*Z*` only
//! when `ρ_α` moves — `σ²_w`, `σ̃²_ε`, and `σ²_α` reuse them.

mod conjugate;
mod transform;

pub use conjugate::{
    beta_conditional, draw_inverse_gamma, ln_ig_pdf, sigma2w_posterior, update_beta,
};
pub use transform::{
    mh_step_with, AdaptiveScale, MhStep, Transform, LAMBDA_MAX, LAMBDA_MIN,
};

use crate::covkernels::{distance_matrix, matern_matrix, MaternParams};
use crate::kronlinalg::{factor_spd, CholeskyFactor, LinalgError, Mat};
use crate::reducedrank::{BasisBuilder, RankError, ReducedRankBasis};
use crate::resplike::{marginal_loglik_factored, Dataset, ModelError, ModelState, Priors};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GibbsError {
    #[error("invalid sampler configuration: {0}")]
    Config(String),
    #[error("malformed chain file: {0}")]
    BadChainFile(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Kernel(#[from] crate::covkernels::KernelError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// How the chain is initialized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitStrategy {
    /// Moment/prior-based starting point (see [`initial_state`]).
    Default,
    /// The default point with ±50% multiplicative jitter on each positive
    /// scalar (`β` stays at zero; ranges are clamped into their support).
    Random,
}

/// Sampler settings. `new` fills the documented defaults: thin 1, chain 0,
/// target acceptance 0.44, adaptation decay 0.7, checkpoint every 500.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_iter: usize,
    pub n_burn: usize,
    pub thin: usize,
    pub seed: u64,
    pub chain_id: u64,
    pub target_accept: f64,
    pub adapt_decay: f64,
    pub init: InitStrategy,
    pub checkpoint: Option<PathBuf>,
    pub checkpoint_every: usize,
}

impl SamplerConfig {
    pub fn new(n_iter: usize, n_burn: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            n_iter,
            n_burn,
            thin: 1,
            seed,
            chain_id: 0,
            target_accept: 0.44,
            adapt_decay: 0.7,
            init: InitStrategy::Default,
            checkpoint: None,
            checkpoint_every: 500,
        }
    }

    fn validate(&self) -> Result<(), GibbsError> {
        if self.n_iter == 0 {
            return Err(GibbsError::Config("n_iter must be positive".into()));
        }
        if self.n_burn >= self.n_iter {
            return Err(GibbsError::Config(format!(
                "n_burn = {} leaves no draws from n_iter = {}",
                self.n_burn, self.n_iter
            )));
        }
        if self.thin == 0 {
            return Err(GibbsError::Config("thin must be positive".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(GibbsError::Config(format!(
                "target acceptance {} outside (0, 1)",
                self.target_accept
            )));
        }
        if !(self.adapt_decay > 0.5 && self.adapt_decay <= 1.0) {
            return Err(GibbsError::Config(format!(
                "adaptation decay {} outside (0.5, 1] — diminishing adaptation fails",
                self.adapt_decay
            )));
        }
        if self.checkpoint.is_some() && self.checkpoint_every == 0 {
            return Err(GibbsError::Config("checkpoint_every must be positive".into()));
        }
        Ok(())
    }
}

/// Accept/propose tally for one Metropolis-updated parameter.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct AcceptCounter {
    pub accepted: u64,
    pub proposed: u64,
}

impl AcceptCounter {
    fn observe(&mut self, accepted: bool) {
        self.proposed += 1;
        if accepted {
            self.accepted += 1;
        }
    }

    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct AcceptStats {
    pub rho_w: AcceptCounter,
    pub nugget_ratio: AcceptCounter,
    pub sigma2_alpha: AcceptCounter,
    pub rho_alpha: AcceptCounter,
}

/// Final adapted proposal scales, one per Metropolis parameter.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ScaleReport {
    pub rho_w: f64,
    pub nugget_ratio: f64,
    pub sigma2_alpha: f64,
    pub rho_alpha: f64,
}

/// Post-burn, thinned output of one sampler run.
#[derive(Clone, Debug)]
pub struct Chain {
    pub states: Vec<ModelState>,
    pub logliks: Vec<f64>,
    /// Absolute sweep index of each kept draw.
    pub iters: Vec<usize>,
    pub accept: AcceptStats,
    pub scales: ScaleReport,
    pub seed: u64,
    pub chain_id: u64,
    pub n_iter: usize,
    pub n_burn: usize,
    pub thin: usize,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Crash-recovery snapshot written every `checkpoint_every` sweeps
/// (temp file + rename, so the file is always whole).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub iter: usize,
    pub state: ModelState,
    pub scales: ScaleReport,
    pub accept: AcceptStats,
    pub seed: u64,
    pub chain_id: u64,
}

fn write_checkpoint(path: &Path, ck: &Checkpoint) -> Result<(), GibbsError> {
    let tmp = path.with_extension("ckpt.tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        serde_json::to_writer_pretty(&mut f, ck)?;
        f.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn ig_prior_mean(a: f64, b: f64) -> f64 {
    if a > 1.0 {
        b / (a - 1.0)
    } else {
        1.0
    }
}

fn clamp_into(x: f64, (lo, hi): (f64, f64)) -> f64 {
    let margin = 1e-6 * (hi - lo);
    x.clamp(lo + margin, hi - margin)
}

/// Documented starting point: `β = 0`, `σ²_w` at the sample variance of the
/// response, nugget ratio 0.1, `σ²_α` at its prior mean, ranges at the
/// midpoints of their uniform supports. `Random` jitters every positive
/// scalar by a factor drawn uniformly from `[0.5, 1.5]`.
pub fn initial_state(
    data: &Dataset,
    priors: &Priors,
    nu_w: f64,
    nu_alpha: f64,
    strategy: InitStrategy,
    rng: &mut impl Rng,
) -> Result<ModelState, GibbsError> {
    let y = data.response.values().as_slice();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let mut state = ModelState {
        beta: vec![0.0; data.p()],
        sigma2_w: if var > 0.0 { var } else { 1.0 },
        nugget_ratio: 0.1,
        sigma2_alpha: ig_prior_mean(priors.ig_alpha.0, priors.ig_alpha.1),
        rho_w: 0.5 * (priors.rho_w_bounds.0 + priors.rho_w_bounds.1),
        rho_alpha: 0.5 * (priors.rho_alpha_bounds.0 + priors.rho_alpha_bounds.1),
        nu_w,
        nu_alpha,
    };
    if strategy == InitStrategy::Random {
        let mut jitter = |x: f64| x * (0.5 + rng.gen::<f64>());
        state.sigma2_w = jitter(state.sigma2_w);
        state.nugget_ratio = jitter(state.nugget_ratio);
        state.sigma2_alpha = jitter(state.sigma2_alpha);
        state.rho_w = clamp_into(jitter(state.rho_w), priors.rho_w_bounds);
        state.rho_alpha = clamp_into(jitter(state.rho_alpha), priors.rho_alpha_bounds);
    }
    state.validate_positive()?;
    Ok(state)
}

/// `Σ = σ²_w (R̃_w + σ̃²_ε I)` from the cached unit-variance correlation.
fn local_sigma(corr_w: &Mat, state: &ModelState) -> Mat {
    let mut s = corr_w.scale(state.sigma2_w);
    s.add_diag(state.sigma2_w * state.nugget_ratio);
    s
}

/// `Z*ᵀ R̃* Z*` from a unit-variance basis — the `σ²_α`-free remote quadratic.
fn remote_quad(basis: &ReducedRankBasis) -> Mat {
    let rz = basis.rstar.matmul(&basis.zstar);
    basis.zstar.tr_matmul(&rz)
}

/// `C⁻¹ = I + σ²_α · Z*ᵀR̃*Z*`.
fn cinv_mat(zc: &Mat, sigma2_alpha: f64) -> Mat {
    let mut c = zc.scale(sigma2_alpha);
    c.add_diag(1.0);
    c
}

/// Run one chain. The RNG is seeded from `cfg.seed` with the ChaCha stream
/// set to `cfg.chain_id`, so chains of one experiment share a seed and stay
/// independent by stream.
pub fn run_chain(
    data: &Dataset,
    builder: &BasisBuilder,
    priors: &Priors,
    nu_w: f64,
    cfg: &SamplerConfig,
) -> Result<Chain, GibbsError> {
    cfg.validate()?;
    priors.validate(data.p())?;
    if builder.remote().n_times() != data.n_t() {
        return Err(GibbsError::Config(format!(
            "basis builder covers {} times, dataset has {}",
            builder.remote().n_times(),
            data.n_t()
        )));
    }
    if builder.remote().locations() != data.remote.locations() {
        return Err(GibbsError::Config(
            "basis builder was built for a different remote grid".into(),
        ));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.chain_id);

    let mut state =
        initial_state(data, priors, nu_w, builder.nu_alpha(), cfg.init, &mut rng)?;

    let dist_s = distance_matrix(data.response.locations());
    let mut corr_w =
        matern_matrix(&dist_s, &MaternParams::new(1.0, state.rho_w, nu_w)?);
    let mut zc = remote_quad(&builder.build(1.0, state.rho_alpha)?);
    let mut sigma_chol = factor_spd(&local_sigma(&corr_w, &state))?;
    let mut cinv_chol = factor_spd(&cinv_mat(&zc, state.sigma2_alpha))?;
    // Fail fast if the initial state is not evaluable.
    marginal_loglik_factored(data, &state.beta, &sigma_chol, &cinv_chol)?;
    let mut loglik;

    let mut scales = ScalesLive {
        rho_w: AdaptiveScale::new(0.5, cfg.target_accept, cfg.adapt_decay),
        nugget_ratio: AdaptiveScale::new(0.5, cfg.target_accept, cfg.adapt_decay),
        sigma2_alpha: AdaptiveScale::new(0.5, cfg.target_accept, cfg.adapt_decay),
        rho_alpha: AdaptiveScale::new(0.5, cfg.target_accept, cfg.adapt_decay),
    };
    let mut accept = AcceptStats::default();

    let kept = (cfg.n_iter - cfg.n_burn).div_ceil(cfg.thin);
    let mut states = Vec::with_capacity(kept);
    let mut logliks = Vec::with_capacity(kept);
    let mut iters = Vec::with_capacity(kept);

    for iter in 0..cfg.n_iter {
        // β | rest — conjugate Gaussian.
        state.beta = update_beta(data, &priors.beta_cov, &sigma_chol, &cinv_chol, &mut rng)?;

        // σ²_w | rest — conjugate inverse-gamma on the expanded scale.
        let mut sigma_tilde = corr_w.clone();
        sigma_tilde.add_diag(state.nugget_ratio);
        let tilde_chol = factor_spd(&sigma_tilde)?;
        let (shape, rate) =
            sigma2w_posterior(data, &state.beta, &tilde_chol, &cinv_chol, priors.ig_w);
        state.sigma2_w = draw_inverse_gamma(shape, rate, &mut rng);
        sigma_chol = factor_spd(&local_sigma(&corr_w, &state))?;
        loglik = marginal_loglik_factored(data, &state.beta, &sigma_chol, &cinv_chol)?;

        // ρ_w — Metropolis on the logit scale, flat prior over the support.
        {
            let mut cand: Option<(Mat, CholeskyFactor, f64)> = None;
            let step = mh_step_with(
                |rho: f64| {
                    let p = MaternParams::new(1.0, rho, nu_w).ok()?;
                    let corr = matern_matrix(&dist_s, &p);
                    let chol = factor_spd(&local_sigma(&corr, &state)).ok()?;
                    let ll =
                        marginal_loglik_factored(data, &state.beta, &chol, &cinv_chol).ok()?;
                    cand = Some((corr, chol, ll));
                    Some(ll)
                },
                Transform::Logit { lo: priors.rho_w_bounds.0, hi: priors.rho_w_bounds.1 },
                state.rho_w,
                loglik,
                &mut scales.rho_w,
                &mut rng,
            );
            accept.rho_w.observe(step.accepted);
            if step.accepted {
                let (corr, chol, ll) = cand.expect("accepted proposal was evaluated");
                corr_w = corr;
                sigma_chol = chol;
                loglik = ll;
                state.rho_w = step.value;
            }
        }

        // σ̃²_ε — Metropolis on the log scale, inverse-gamma prior.
        {
            let (a, b) = priors.ig_eps;
            let mut cand: Option<(CholeskyFactor, f64)> = None;
            let step = mh_step_with(
                |eps: f64| {
                    let mut s = corr_w.scale(state.sigma2_w);
                    s.add_diag(state.sigma2_w * eps);
                    let chol = factor_spd(&s).ok()?;
                    let ll =
                        marginal_loglik_factored(data, &state.beta, &chol, &cinv_chol).ok()?;
                    cand = Some((chol, ll));
                    Some(ll + ln_ig_pdf(eps, a, b))
                },
                Transform::Log,
                state.nugget_ratio,
                loglik + ln_ig_pdf(state.nugget_ratio, a, b),
                &mut scales.nugget_ratio,
                &mut rng,
            );
            accept.nugget_ratio.observe(step.accepted);
            if step.accepted {
                let (chol, ll) = cand.expect("accepted proposal was evaluated");
                sigma_chol = chol;
                loglik = ll;
                state.nugget_ratio = step.value;
            }
        }

        // σ²_α — Metropolis on the log scale, inverse-gamma prior. The
        // remote quadratic is σ²_α-free, so only a small factorization moves.
        {
            let (a, b) = priors.ig_alpha;
            let mut cand: Option<(CholeskyFactor, f64)> = None;
            let step = mh_step_with(
                |s2a: f64| {
                    let chol = factor_spd(&cinv_mat(&zc, s2a)).ok()?;
                    let ll =
                        marginal_loglik_factored(data, &state.beta, &sigma_chol, &chol).ok()?;
                    cand = Some((chol, ll));
                    Some(ll + ln_ig_pdf(s2a, a, b))
                },
                Transform::Log,
                state.sigma2_alpha,
                loglik + ln_ig_pdf(state.sigma2_alpha, a, b),
                &mut scales.sigma2_alpha,
                &mut rng,
            );
            accept.sigma2_alpha.observe(step.accepted);
            if step.accepted {
                let (chol, ll) = cand.expect("accepted proposal was evaluated");
                cinv_chol = chol;
                loglik = ll;
                state.sigma2_alpha = step.value;
            }
        }

        // ρ_α — Metropolis on the logit scale, flat prior; rebuilds the
        // induced covariates through the basis builder's cached distances.
        {
            let mut cand: Option<(Mat, CholeskyFactor, f64)> = None;
            let step = mh_step_with(
                |rho: f64| {
                    let basis = builder.build(1.0, rho).ok()?;
                    let zq = remote_quad(&basis);
                    let chol = factor_spd(&cinv_mat(&zq, state.sigma2_alpha)).ok()?;
                    let ll =
                        marginal_loglik_factored(data, &state.beta, &sigma_chol, &chol).ok()?;
                    cand = Some((zq, chol, ll));
                    Some(ll)
                },
                Transform::Logit {
                    lo: priors.rho_alpha_bounds.0,
                    hi: priors.rho_alpha_bounds.1,
                },
                state.rho_alpha,
                loglik,
                &mut scales.rho_alpha,
                &mut rng,
            );
            accept.rho_alpha.observe(step.accepted);
            if step.accepted {
                let (zq, chol, ll) = cand.expect("accepted proposal was evaluated");
                zc = zq;
                cinv_chol = chol;
                loglik = ll;
                state.rho_alpha = step.value;
            }
        }

        if iter >= cfg.n_burn && (iter - cfg.n_burn) % cfg.thin == 0 {
            states.push(state.clone());
            logliks.push(loglik);
            iters.push(iter);
        }

        if let Some(path) = &cfg.checkpoint {
            if (iter + 1) % cfg.checkpoint_every == 0 {
                write_checkpoint(
                    path,
                    &Checkpoint {
                        iter: iter + 1,
                        state: state.clone(),
                        scales: scales.report(),
                        accept,
                        seed: cfg.seed,
                        chain_id: cfg.chain_id,
                    },
                )?;
            }
        }
    }

    Ok(Chain {
        states,
        logliks,
        iters,
        accept,
        scales: scales.report(),
        seed: cfg.seed,
        chain_id: cfg.chain_id,
        n_iter: cfg.n_iter,
        n_burn: cfg.n_burn,
        thin: cfg.thin,
    })
}

struct ScalesLive {
    rho_w: AdaptiveScale,
    nugget_ratio: AdaptiveScale,
    sigma2_alpha: AdaptiveScale,
    rho_alpha: AdaptiveScale,
}

impl ScalesLive {
    fn report(&self) -> ScaleReport {
        ScaleReport {
            rho_w: self.rho_w.lambda(),
            nugget_ratio: self.nugget_ratio.lambda(),
            sigma2_alpha: self.sigma2_alpha.lambda(),
            rho_alpha: self.rho_alpha.lambda(),
        }
    }
}

const CHAIN_FIXED_COLS: [&str; 6] =
    ["sigma2_w", "nugget_ratio", "sigma2_alpha", "rho_w", "rho_alpha", "loglik"];

/// Write the kept draws as CSV: `iter, beta_0.., sigma2_w, nugget_ratio,
/// sigma2_alpha, rho_w, rho_alpha, loglik`. Floats use the shortest
/// round-trip form, so a read-back is bitwise faithful.
pub fn write_chain_csv(path: &Path, chain: &Chain) -> Result<(), GibbsError> {
    let p = chain.states.first().map(|s| s.beta.len()).unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["iter".to_string()];
    header.extend((0..p).map(|j| format!("beta_{j}")));
    header.extend(CHAIN_FIXED_COLS.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for ((it, s), ll) in chain.iters.iter().zip(&chain.states).zip(&chain.logliks) {
        let mut rec = vec![it.to_string()];
        rec.extend(s.beta.iter().map(|b| b.to_string()));
        for v in [s.sigma2_w, s.nugget_ratio, s.sigma2_alpha, s.rho_w, s.rho_alpha, *ll] {
            rec.push(v.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a chain CSV back into states. The smoothness values are not part of
/// the file (they are fixed per run) and must be supplied.
pub fn read_chain_csv(
    path: &Path,
    nu_w: f64,
    nu_alpha: f64,
) -> Result<(Vec<usize>, Vec<ModelState>, Vec<f64>), GibbsError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols.first() != Some(&"iter") {
        return Err(GibbsError::BadChainFile("first column must be `iter`".into()));
    }
    let p = cols.iter().filter(|h| h.starts_with("beta_")).count();
    let mut expect = vec!["iter".to_string()];
    expect.extend((0..p).map(|j| format!("beta_{j}")));
    expect.extend(CHAIN_FIXED_COLS.iter().map(|s| s.to_string()));
    if cols != expect.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(GibbsError::BadChainFile(format!(
            "header {:?} does not match the chain layout",
            cols
        )));
    }
    let parse = |field: &str, what: &str, row: usize| -> Result<f64, GibbsError> {
        field.parse::<f64>().map_err(|_| {
            GibbsError::BadChainFile(format!("row {row}: bad {what} value {field:?}"))
        })
    };
    let mut iters = Vec::new();
    let mut states = Vec::new();
    let mut logliks = Vec::new();
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != expect.len() {
            return Err(GibbsError::BadChainFile(format!(
                "row {row}: {} fields, expected {}",
                rec.len(),
                expect.len()
            )));
        }
        let iter: usize = rec[0].parse().map_err(|_| {
            GibbsError::BadChainFile(format!("row {row}: bad iter value {:?}", &rec[0]))
        })?;
        let beta = (0..p)
            .map(|j| parse(&rec[1 + j], "beta", row))
            .collect::<Result<Vec<f64>, _>>()?;
        let f = |k: usize, what: &str| parse(&rec[1 + p + k], what, row);
        states.push(ModelState {
            beta,
            sigma2_w: f(0, "sigma2_w")?,
            nugget_ratio: f(1, "nugget_ratio")?,
            sigma2_alpha: f(2, "sigma2_alpha")?,
            rho_w: f(3, "rho_w")?,
            rho_alpha: f(4, "rho_alpha")?,
            nu_w,
            nu_alpha,
        });
        logliks.push(f(5, "loglik")?);
        iters.push(iter);
    }
    Ok((iters, states, logliks))
}

/// Narrowest interval containing at least `mass` of the samples (highest
/// posterior density under unimodality).
pub fn hpd_interval(samples: &[f64], mass: f64) -> Option<(f64, f64)> {
    if !(mass > 0.0 && mass <= 1.0) {
        return None;
    }
    let mut s: Vec<f64> = samples.iter().copied().filter(|v| v.is_finite()).collect();
    if s.is_empty() {
        return None;
    }
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    let m = ((mass * n as f64).ceil() as usize).clamp(1, n);
    let mut best = (s[0], s[n - 1]);
    let mut width = f64::INFINITY;
    for i in 0..=(n - m) {
        let w = s[i + m - 1] - s[i];
        if w < width {
            width = w;
            best = (s[i], s[i + m - 1]);
        }
    }
    Some(best)
}
