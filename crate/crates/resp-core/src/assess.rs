//! Model assessment: variance inflation factors, tercile forecasts,
//! Heidke and ranked probability scores, the climatology reference, and
//! the leave-one-out cross-validation driver.
//!
//! Empirical quantiles use the type-7 (linear interpolation) convention
//! throughout; category boundaries shift with the convention, so it is
//! pinned here and in every consumer.

use std::fs::File;
use std::io::{BufWriter, Write as IoWrite};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::covkernels::{build_local_cov, KernelError, Location};
use crate::gibbs::{beta_conditional, run_chain, GibbsError, SamplerConfig};
use crate::kronlinalg::{factor_spd, LinalgError, Mat};
use crate::posteriorops::{predict, PosteriorError};
use crate::reducedrank::{BasisBuilder, RankError, ReducedRankBasis};
use crate::resplike::{
    temporal_factor, Dataset, GridSeries, ModelError, ModelState, Priors,
};

/// Reference accuracy of the no-skill categorical model (three terciles).
pub const P_REF_TERCILE: f64 = 1.0 / 3.0;

const MODEL_RESP: &str = "resp";
const MODEL_CLIMATOLOGY: &str = "climatology";

#[derive(Debug, Error)]
pub enum AssessError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("need at least 3 training values per location, location {index} has {n}")]
    ShortTraining { index: usize, n: usize },
    #[error("zero variance in {what} at location {index}: cannot standardize")]
    ZeroVariance { what: &'static str, index: usize },
    #[error("category {value} outside 1..=3")]
    BadCategory { value: usize },
    #[error("leave-one-out needs at least 4 timepoints, got {0}")]
    TooFewYears(usize),
    #[error("coefficient index {index} out of range for {len}")]
    BadIndex { index: usize, len: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gibbs(#[from] GibbsError),
    #[error(transparent)]
    Posterior(#[from] PosteriorError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Type-7 empirical quantile (linear interpolation between order
/// statistics, the R default). `sorted` must be ascending and nonempty.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    assert!((0.0..=1.0).contains(&p), "quantile level {p} outside [0, 1]");
    let h = (sorted.len() as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Tercile category of `v` under cutpoints `(q1, q2)`: 1 for
/// `(−∞, q₁]`, 2 for `(q₁, q₂]`, 3 for `(q₂, ∞)`.
pub fn categorize(v: f64, cuts: (f64, f64)) -> usize {
    if v <= cuts.0 {
        1
    } else if v <= cuts.1 {
        2
    } else {
        3
    }
}

/// Per-location tercile cutpoints `(q_{1/3}, q_{2/3})` of a training
/// series (type-7 quantiles over time).
pub fn training_cutpoints(train: &GridSeries) -> Result<Vec<(f64, f64)>, AssessError> {
    let n_t = train.n_times();
    (0..train.n_locations())
        .map(|i| {
            if n_t < 3 {
                return Err(AssessError::ShortTraining { index: i, n: n_t });
            }
            let mut row: Vec<f64> = (0..n_t).map(|t| train.values()[(i, t)]).collect();
            row.sort_by(|a, b| a.partial_cmp(b).expect("finite series"));
            Ok((
                empirical_quantile(&row, 1.0 / 3.0),
                empirical_quantile(&row, 2.0 / 3.0),
            ))
        })
        .collect()
}

/// Probabilistic three-category (below/near/above average) forecast with
/// the training-data cutpoints that define the categories.
#[derive(Clone, Debug)]
pub struct CategoricalForecast {
    /// `n_s × 3` category probabilities, each row summing to one.
    pub probs: Mat,
    /// Per-location `(q_{1/3}, q_{2/3})` from training data only.
    pub cutpoints: Vec<(f64, f64)>,
}

impl CategoricalForecast {
    /// Validating constructor: probabilities in `[0, 1]` with row sums
    /// `1 ± 1e-10`, cutpoints ordered.
    pub fn new(probs: Mat, cutpoints: Vec<(f64, f64)>) -> Result<Self, AssessError> {
        if probs.cols() != 3 || probs.rows() != cutpoints.len() {
            return Err(AssessError::Shape(format!(
                "probabilities are {}×{}, cutpoints cover {} locations",
                probs.rows(),
                probs.cols(),
                cutpoints.len()
            )));
        }
        for i in 0..probs.rows() {
            let mut sum = 0.0;
            for j in 0..3 {
                let p = probs[(i, j)];
                if !(0.0..=1.0).contains(&p) {
                    return Err(AssessError::Shape(format!(
                        "probability {p} at ({i}, {j}) outside [0, 1]"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-10 {
                return Err(AssessError::Shape(format!("row {i} sums to {sum}")));
            }
            if cutpoints[i].0 > cutpoints[i].1 {
                return Err(AssessError::Shape(format!(
                    "cutpoints at location {i} out of order: {:?}",
                    cutpoints[i]
                )));
            }
        }
        Ok(CategoricalForecast { probs, cutpoints })
    }

    pub fn n_locations(&self) -> usize {
        self.probs.rows()
    }

    /// Modal category per location; ties break toward "near average"
    /// (category 2), then toward the lower index.
    pub fn point_categories(&self) -> Vec<usize> {
        (0..self.probs.rows())
            .map(|i| {
                let p = [self.probs[(i, 0)], self.probs[(i, 1)], self.probs[(i, 2)]];
                let max = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if p[1] == max {
                    2
                } else if p[0] == max {
                    1
                } else {
                    3
                }
            })
            .collect()
    }
}

/// Discretize predictive draws against training-data terciles: category
/// probabilities are the fractions of draws in `(−∞, q₁]`, `(q₁, q₂]`,
/// `(q₂, ∞)` per location.
pub fn discretize(
    pred_draws: &Mat,
    train: &GridSeries,
) -> Result<CategoricalForecast, AssessError> {
    if pred_draws.rows() != train.n_locations() {
        return Err(AssessError::Shape(format!(
            "draws cover {} locations, training series {}",
            pred_draws.rows(),
            train.n_locations()
        )));
    }
    let g = pred_draws.cols();
    if g == 0 {
        return Err(AssessError::Empty("predictive draws".into()));
    }
    let cutpoints = training_cutpoints(train)?;
    let mut probs = Mat::zeros(pred_draws.rows(), 3);
    for i in 0..pred_draws.rows() {
        let mut counts = [0usize; 3];
        for j in 0..g {
            counts[categorize(pred_draws[(i, j)], cutpoints[i]) - 1] += 1;
        }
        for c in 0..3 {
            probs[(i, c)] = counts[c] as f64 / g as f64;
        }
    }
    CategoricalForecast::new(probs, cutpoints)
}

/// Climatology reference: the empirical training frequency of each
/// tercile category per location. With degenerate (constant) training
/// data both cutpoints coincide, every value falls in `(−∞, q₁]`, and the
/// forecast is deterministically `(1, 0, 0)`.
pub fn climatology_forecast(train: &GridSeries) -> Result<CategoricalForecast, AssessError> {
    let cutpoints = training_cutpoints(train)?;
    let n_t = train.n_times();
    let mut probs = Mat::zeros(train.n_locations(), 3);
    for i in 0..train.n_locations() {
        let mut counts = [0usize; 3];
        for t in 0..n_t {
            counts[categorize(train.values()[(i, t)], cutpoints[i]) - 1] += 1;
        }
        for c in 0..3 {
            probs[(i, c)] = counts[c] as f64 / n_t as f64;
        }
    }
    CategoricalForecast::new(probs, cutpoints)
}

fn check_categories(cats: &[usize]) -> Result<(), AssessError> {
    match cats.iter().find(|&&c| !(1..=3).contains(&c)) {
        Some(&value) => Err(AssessError::BadCategory { value }),
        None => Ok(()),
    }
}

/// Heidke skill score `(p_model − p_ref) / (1 − p_ref)` where `p_model`
/// is the fraction of correct point predictions. One by definition when
/// everything is correct, zero at reference accuracy.
pub fn heidke(
    point_cats: &[usize],
    obs_cats: &[usize],
    p_ref: f64,
) -> Result<f64, AssessError> {
    if point_cats.is_empty() {
        return Err(AssessError::Empty("point predictions".into()));
    }
    if point_cats.len() != obs_cats.len() {
        return Err(AssessError::Shape(format!(
            "{} predictions vs {} observations",
            point_cats.len(),
            obs_cats.len()
        )));
    }
    if !(0.0..1.0).contains(&p_ref) {
        return Err(AssessError::Shape(format!("reference accuracy {p_ref} outside [0, 1)")));
    }
    check_categories(point_cats)?;
    check_categories(obs_cats)?;
    let correct = point_cats.iter().zip(obs_cats).filter(|(a, b)| a == b).count();
    let p_model = correct as f64 / point_cats.len() as f64;
    Ok((p_model - p_ref) / (1.0 - p_ref))
}

/// Ranked probability score, averaged over locations:
/// `(1/n_s) Σ_i Σ_{j=1..3} (F̂(j; s_i) − 1{obs_i ≤ j})²` with `F̂` the
/// cumulative forecast probabilities. Zero for a point mass on the
/// observed category; the three-category maximum is 2.
pub fn rps(forecast: &CategoricalForecast, obs_cats: &[usize]) -> Result<f64, AssessError> {
    let n_s = forecast.n_locations();
    if obs_cats.len() != n_s {
        return Err(AssessError::Shape(format!(
            "{} observations for {} forecast locations",
            obs_cats.len(),
            n_s
        )));
    }
    if n_s == 0 {
        return Err(AssessError::Empty("forecast".into()));
    }
    check_categories(obs_cats)?;
    let mut total = 0.0;
    for i in 0..n_s {
        let mut cum = 0.0;
        for j in 1..=3usize {
            cum += forecast.probs[(i, j - 1)];
            let obs_cum = if obs_cats[i] <= j { 1.0 } else { 0.0 };
            total += (cum - obs_cum) * (cum - obs_cum);
        }
    }
    Ok(total / n_s as f64)
}

/// Variance inflation factor of the `i`-th local regression coefficient:
/// the ratio of its posterior variance under the full temporally
/// correlated model (`C = (I + Z*ᵀR*Z*)⁻¹`) to its variance under
/// independent time replicates (`C = I`), both at the covariance
/// parameters in `state`. Equals 1 exactly when the remote covariates
/// vanish and is never below 1 up to round-off.
pub fn vif_local(
    i: usize,
    data: &Dataset,
    state: &ModelState,
    basis: &ReducedRankBasis,
    priors: &Priors,
) -> Result<f64, AssessError> {
    if i >= data.p() {
        return Err(AssessError::BadIndex { index: i, len: data.p() });
    }
    state.validate_positive()?;
    let sigma = build_local_cov(data.response.locations(), &state.local_cov_params());
    let sigma_chol = factor_spd(&sigma)?;
    let cinv_full = temporal_factor(basis);
    let full_chol = factor_spd(&cinv_full)?;
    let base_chol = factor_spd(&Mat::identity(data.n_t()))?;
    let (prec_full, _) = beta_conditional(data, &priors.beta_cov, &sigma_chol, &full_chol)?;
    let (prec_base, _) = beta_conditional(data, &priors.beta_cov, &sigma_chol, &base_chol)?;
    let var_full = factor_spd(&prec_full)?.inverse()[(i, i)];
    let var_base = factor_spd(&prec_base)?.inverse()[(i, i)];
    Ok(var_full / var_base)
}

/// Variance inflation factor of the `i`-th knot's teleconnection effect:
/// `((R*⁻¹ + Z*Z*ᵀ)⁻¹)_{ii}` relative to the single-knot variance
/// `(1/σ²_α + ‖Z*_{i,·}‖²)⁻¹`. Equals 1 exactly for `k = 1`.
pub fn vif_remote(
    i: usize,
    state: &ModelState,
    basis: &ReducedRankBasis,
) -> Result<f64, AssessError> {
    let k = basis.k();
    if i >= k {
        return Err(AssessError::BadIndex { index: i, len: k });
    }
    state.validate_positive()?;
    // M = R* − (R*Z*)(I + Z*ᵀR*Z*)⁻¹(R*Z*)ᵀ, as in the coefficient posterior.
    let rz = basis.rstar.matmul(&basis.zstar);
    let mut ctilde = basis.zstar.tr_matmul(&rz);
    ctilde.add_diag(1.0);
    let sol = factor_spd(&ctilde)?.solve(&rz.transpose());
    let mut m = basis.rstar.clone();
    m.add_scaled(-1.0, &rz.matmul(&sol));
    let row_norm2: f64 = (0..basis.n_t()).map(|t| basis.zstar[(i, t)].powi(2)).sum();
    Ok(m[(i, i)] * (1.0 / state.sigma2_alpha + row_norm2))
}

/// Per-location mean and sd (over a set of time columns) used to bring
/// training and test data onto a common scale.
#[derive(Clone, Debug)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Column-subset location statistics with the `n − 1` sd denominator.
/// Errors when any location is constant over the selected columns.
pub fn location_stats(
    values: &Mat,
    cols: &[usize],
    what: &'static str,
) -> Result<Standardization, AssessError> {
    if cols.len() < 2 {
        return Err(AssessError::Empty(format!("{what}: need ≥ 2 columns for an sd")));
    }
    let n = cols.len() as f64;
    let mut mean = vec![0.0; values.rows()];
    let mut sd = vec![0.0; values.rows()];
    for i in 0..values.rows() {
        let mut m = 0.0;
        for &t in cols {
            m += values[(i, t)];
        }
        m /= n;
        let mut s2 = 0.0;
        for &t in cols {
            let d = values[(i, t)] - m;
            s2 += d * d;
        }
        let s = (s2 / (n - 1.0)).sqrt();
        if !(s.is_finite() && s > 0.0) {
            return Err(AssessError::ZeroVariance { what, index: i });
        }
        mean[i] = m;
        sd[i] = s;
    }
    Ok(Standardization { mean, sd })
}

fn standardize_values(values: &Mat, st: &Standardization) -> Mat {
    let mut out = Mat::zeros(values.rows(), values.cols());
    for i in 0..values.rows() {
        for t in 0..values.cols() {
            out[(i, t)] = (values[(i, t)] - st.mean[i]) / st.sd[i];
        }
    }
    out
}

/// One leave-one-out fold: the (optionally restandardized) training
/// dataset plus the held-out timepoint's covariates and response, all on
/// the training scale.
#[derive(Clone, Debug)]
pub struct FoldData {
    pub train: Dataset,
    pub x_t0: Mat,
    pub z_t0: Vec<f64>,
    pub y_t0: Vec<f64>,
    pub year: String,
}

/// Split out timepoint `t0` for validation. With `standardize` set, the
/// response and remote fields are centered and scaled per location using
/// statistics from the training years only — the held-out year is
/// transformed with those same statistics, never its own, so no test
/// information leaks into the training scale or the tercile cutpoints.
pub fn holdout_split(
    full: &Dataset,
    t0: usize,
    standardize: bool,
) -> Result<FoldData, AssessError> {
    let n_t = full.n_t();
    if t0 >= n_t {
        return Err(AssessError::Shape(format!("holdout index {t0} out of {n_t} timepoints")));
    }
    let train_idx: Vec<usize> = (0..n_t).filter(|&t| t != t0).collect();
    let (resp_values, remote_values) = if standardize {
        let resp_st = location_stats(full.response.values(), &train_idx, "response")?;
        let rem_st = location_stats(full.remote.values(), &train_idx, "remote field")?;
        (
            standardize_values(full.response.values(), &resp_st),
            standardize_values(full.remote.values(), &rem_st),
        )
    } else {
        (full.response.values().clone(), full.remote.values().clone())
    };
    let scaled = Dataset::new(
        GridSeries::new(full.response.locations().to_vec(), resp_values)?,
        full.local_design.clone(),
        GridSeries::new(full.remote.locations().to_vec(), remote_values)?,
        full.time_index.clone(),
    )?;
    let train = scaled.select_times(&train_idx);
    Ok(FoldData {
        x_t0: scaled.local_design[t0].clone(),
        z_t0: scaled.remote.values().col(t0),
        y_t0: scaled.response.values().col(t0),
        year: scaled.time_index[t0].clone(),
        train,
    })
}

/// Model inputs the cross-validation driver needs beyond the dataset.
#[derive(Clone, Debug)]
pub struct LooModel {
    pub knots: Vec<Location>,
    pub nu_w: f64,
    pub nu_alpha: f64,
    pub priors: Priors,
}

/// Scoring and resource settings for [`loo_validate`].
#[derive(Clone, Debug)]
pub struct MetricsConfig {
    /// Predictive draws per held-out year (capped at the chain length).
    pub g: usize,
    /// Parallel fold workers.
    pub workers: usize,
    /// Base seed for the per-fold predictive RNG.
    pub seed: u64,
    /// Restandardize per fold using training years only.
    pub standardize: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig { g: 200, workers: 1, seed: 0, standardize: true }
    }
}

/// One scored (year, model) pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkillReport {
    pub year: String,
    pub model: String,
    pub heidke: f64,
    pub rps: f64,
    /// RPS minus the climatology median RPS across scored years.
    pub rps_relative: f64,
}

/// A fold that could not be scored; the run continues without it.
#[derive(Clone, Debug, Serialize)]
pub struct FoldFailure {
    pub year: String,
    pub error: String,
}

/// Full leave-one-out result: two [`SkillReport`] rows per scored year
/// (model and climatology reference) plus any per-year failures.
#[derive(Clone, Debug)]
pub struct LooOutcome {
    pub reports: Vec<SkillReport>,
    pub failures: Vec<FoldFailure>,
}

struct FoldScore {
    year: String,
    resp_heidke: f64,
    resp_rps: f64,
    clim_heidke: f64,
    clim_rps: f64,
}

fn score_fold(
    full: &Dataset,
    t0: usize,
    model: &LooModel,
    sampler: &SamplerConfig,
    metrics: &MetricsConfig,
) -> Result<FoldScore, AssessError> {
    let fold = holdout_split(full, t0, metrics.standardize)?;
    let builder =
        BasisBuilder::new(fold.train.remote.clone(), model.knots.clone(), model.nu_alpha)?;
    // Fold-specific RNG streams: the sampler keys its stream by chain id.
    let mut cfg = sampler.clone();
    cfg.chain_id = t0 as u64;
    cfg.checkpoint = None;
    let chain = run_chain(&fold.train, &builder, &model.priors, model.nu_w, &cfg)?;
    let g = metrics.g.min(chain.len()).max(1);
    let pred_seed = metrics.seed ^ (t0 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let pred = predict(
        &chain,
        &fold.train,
        &builder,
        &fold.x_t0,
        &fold.z_t0,
        g,
        1,
        pred_seed,
    )?;
    let forecast = discretize(&pred.draws, &fold.train.response)?;
    let obs: Vec<usize> = fold
        .y_t0
        .iter()
        .zip(&forecast.cutpoints)
        .map(|(&y, &cuts)| categorize(y, cuts))
        .collect();
    let clim = climatology_forecast(&fold.train.response)?;
    Ok(FoldScore {
        year: fold.year,
        resp_heidke: heidke(&forecast.point_categories(), &obs, P_REF_TERCILE)?,
        resp_rps: rps(&forecast, &obs)?,
        clim_heidke: heidke(&clim.point_categories(), &obs, P_REF_TERCILE)?,
        clim_rps: rps(&clim, &obs)?,
    })
}

/// Leave-one-year-out cross-validation: per held-out year, restandardize
/// on training years, fit a chain, predict the held-out year, discretize
/// with training cutpoints, and score the model against the climatology
/// reference. `rps_relative` is reported against the climatology median
/// RPS over scored years. Folds are independent and run on up to
/// `metrics.workers` in parallel; per-fold RNG streams make the result
/// worker-invariant. Per-year failures are recorded and the run
/// continues.
pub fn loo_validate(
    full: &Dataset,
    model: &LooModel,
    sampler: &SamplerConfig,
    metrics: &MetricsConfig,
) -> Result<LooOutcome, AssessError> {
    let n_t = full.n_t();
    if n_t < 4 {
        return Err(AssessError::TooFewYears(n_t));
    }
    if metrics.workers == 0 {
        return Err(AssessError::Shape("workers must be at least 1".into()));
    }
    let w = metrics.workers.min(n_t).max(1);
    let ranges: Vec<std::ops::Range<usize>> =
        (0..w).map(|c| (c * n_t / w)..((c + 1) * n_t / w)).filter(|r| !r.is_empty()).collect();
    let per_fold: Vec<Result<FoldScore, (String, String)>> = ranges
        .into_par_iter()
        .flat_map_iter(|range| {
            let mut out = Vec::with_capacity(range.len());
            for t0 in range {
                out.push(score_fold(full, t0, model, sampler, metrics).map_err(|e| {
                    (full.time_index[t0].clone(), e.to_string())
                }));
            }
            out
        })
        .collect();

    let mut scores = Vec::new();
    let mut failures = Vec::new();
    for item in per_fold {
        match item {
            Ok(s) => scores.push(s),
            Err((year, error)) => failures.push(FoldFailure { year, error }),
        }
    }
    let mut clim_rps: Vec<f64> = scores.iter().map(|s| s.clim_rps).collect();
    clim_rps.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    let clim_median = if clim_rps.is_empty() {
        f64::NAN
    } else {
        empirical_quantile(&clim_rps, 0.5)
    };
    let mut reports = Vec::with_capacity(2 * scores.len());
    for s in scores {
        reports.push(SkillReport {
            year: s.year.clone(),
            model: MODEL_RESP.into(),
            heidke: s.resp_heidke,
            rps: s.resp_rps,
            rps_relative: s.resp_rps - clim_median,
        });
        reports.push(SkillReport {
            year: s.year,
            model: MODEL_CLIMATOLOGY.into(),
            heidke: s.clim_heidke,
            rps: s.clim_rps,
            rps_relative: s.clim_rps - clim_median,
        });
    }
    Ok(LooOutcome { reports, failures })
}

/// Write skill rows as CSV: `year,model,heidke,rps,rps_relative`.
pub fn write_skill_csv(path: &Path, reports: &[SkillReport]) -> Result<(), AssessError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "year,model,heidke,rps,rps_relative")?;
    for r in reports {
        writeln!(out, "{},{},{},{},{}", r.year, r.model, r.heidke, r.rps, r.rps_relative)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct MetricSummary {
    median: f64,
    iqr: f64,
}

fn summarize_metric(values: &mut Vec<f64>) -> MetricSummary {
    values.retain(|v| v.is_finite());
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite after retain"));
    if values.is_empty() {
        return MetricSummary { median: f64::NAN, iqr: f64::NAN };
    }
    MetricSummary {
        median: empirical_quantile(values, 0.5),
        iqr: empirical_quantile(values, 0.75) - empirical_quantile(values, 0.25),
    }
}

/// Median/IQR summary of the skill rows, grouped by model, as a JSON
/// value (also carries the per-year failures).
pub fn skill_summary(outcome: &LooOutcome) -> serde_json::Value {
    let mut models = serde_json::Map::new();
    let mut labels: Vec<&str> = outcome.reports.iter().map(|r| r.model.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    for label in labels {
        let rows: Vec<&SkillReport> =
            outcome.reports.iter().filter(|r| r.model == label).collect();
        let mut heidke: Vec<f64> = rows.iter().map(|r| r.heidke).collect();
        let mut rps: Vec<f64> = rows.iter().map(|r| r.rps).collect();
        let mut rel: Vec<f64> = rows.iter().map(|r| r.rps_relative).collect();
        models.insert(
            label.to_string(),
            serde_json::json!({
                "n_years": rows.len(),
                "heidke": summarize_metric(&mut heidke),
                "rps": summarize_metric(&mut rps),
                "rps_relative": summarize_metric(&mut rel),
            }),
        );
    }
    serde_json::json!({
        "models": models,
        "failures": outcome.failures,
    })
}

/// Write [`skill_summary`] as pretty-printed JSON.
pub fn write_skill_summary(path: &Path, outcome: &LooOutcome) -> Result<(), AssessError> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, &skill_summary(outcome))
        .map_err(|e| AssessError::Shape(format!("summary serialization: {e}")))?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}
