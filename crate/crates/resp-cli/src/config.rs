//! Run configuration: one TOML file, flag overrides, documented defaults.
//!
//! Input paths in `[paths]` resolve relative to the config file's directory;
//! the output directory resolves relative to the working directory with
//! precedence `--out` > `out` in the config > `$RESP_OUT_DIR` > `resp-out`.
//! A base seed is mandatory for every command that consumes randomness
//! (`simulate`, `fit`, `compose`, `predict`, `validate`), either as the
//! top-level `seed` key or the `--seed` flag (the flag wins).

use crate::error::{config_err, CliError};
use resp_core::covkernels::Location;
use resp_core::gibbs::{InitStrategy, SamplerConfig};
use resp_core::kronlinalg::Mat;
use resp_core::reducedrank::{place_knot_grid, BBox};
use resp_core::resplike::{ModelState, Priors};
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_true")]
    pub standardize: bool,
    pub out: Option<PathBuf>,
    pub paths: Option<PathsConfig>,
    #[serde(default)]
    pub model: ModelConfig,
    pub sampler: Option<SamplerBlock>,
    #[serde(default)]
    pub compose: DrawBlock,
    pub predict: Option<PredictBlock>,
    #[serde(default)]
    pub validate: DrawBlock,
    pub simulate: Option<SimulateBlock>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub locations: PathBuf,
    pub response: PathBuf,
    pub remote_locations: PathBuf,
    pub remote: PathBuf,
    pub knots: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// Local Matérn smoothness (fixed, not sampled).
    pub nu_w: f64,
    /// Remote Matérn smoothness (fixed, not sampled).
    pub nu_alpha: f64,
    /// Leading patterns to retain in `eofs`.
    pub eof_count: Option<usize>,
    pub priors: Option<PriorsConfig>,
    pub knot_grid: Option<KnotGridConfig>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            nu_w: 0.5,
            nu_alpha: 2.5,
            eof_count: None,
            priors: None,
            knot_grid: None,
        }
    }
}

/// Prior overrides; anything omitted keeps the documented default
/// (`β ~ N(0, 10 I)`, IG(2,1) on `σ²_w` and the nugget ratio, IG(6,10) on
/// `σ²_α`, `ρ_w ~ U(1, 600)`, `ρ_α ~ U(1, 2000)`).
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorsConfig {
    pub beta_var: Option<f64>,
    pub ig_w: Option<(f64, f64)>,
    pub ig_eps: Option<(f64, f64)>,
    pub ig_alpha: Option<(f64, f64)>,
    pub rho_w_bounds: Option<(f64, f64)>,
    pub rho_alpha_bounds: Option<(f64, f64)>,
}

/// Equal-spacing knot placement inside a bounding box (cell centers,
/// at most `count` knots).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnotGridConfig {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
    pub count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerBlock {
    pub n_iter: usize,
    pub n_burn: usize,
    #[serde(default = "default_thin")]
    pub thin: usize,
    #[serde(default)]
    pub chain_id: u64,
    #[serde(default = "default_target_accept")]
    pub target_accept: f64,
    #[serde(default = "default_adapt_decay")]
    pub adapt_decay: f64,
    pub init: Option<InitStrategy>,
    /// Write a crash-recovery checkpoint (`chain.ckpt` in the output dir).
    #[serde(default)]
    pub checkpoint: bool,
    #[serde(default = "default_checkpoint_every")]
    pub checkpoint_every: usize,
}

fn default_thin() -> usize {
    1
}

fn default_target_accept() -> f64 {
    0.44
}

fn default_adapt_decay() -> f64 {
    0.7
}

fn default_checkpoint_every() -> usize {
    500
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DrawBlock {
    /// Composition / predictive draws.
    pub g: usize,
    /// Parallel workers (never changes results, only wall time).
    pub workers: usize,
}

impl Default for DrawBlock {
    fn default() -> Self {
        DrawBlock { g: 200, workers: 1 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictBlock {
    /// Time label to predict (must exist in the ingested series).
    pub time: Option<String>,
    #[serde(default = "default_g")]
    pub g: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_g() -> usize {
    200
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    pub n_t: usize,
    pub response_grid: GridSpec,
    pub remote_grid: GridSpec,
    /// Matérn range (km) of the synthetic remote field.
    pub remote_rho: f64,
    #[serde(default = "default_remote_nu")]
    pub remote_nu: f64,
    pub truth: TruthBlock,
}

fn default_remote_nu() -> f64 {
    2.5
}

/// Row-major regular lon/lat grid; point `(r, c)` sits at
/// `(lon0 + c·step, lat0 + r·step)`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    pub lon0: f64,
    pub lat0: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn locations(&self, prefix: &str) -> Result<Vec<(String, Location)>, CliError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(config_err(format!(
                "{prefix} grid is {}x{}; both extents must be positive",
                self.rows, self.cols
            )));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(config_err(format!("{prefix} grid step {} must be positive", self.step)));
        }
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let lon = self.lon0 + c as f64 * self.step;
                let lat = self.lat0 + r as f64 * self.step;
                let loc = Location::new(lon, lat).map_err(config_err)?;
                out.push((format!("{prefix}{}", r * self.cols + c), loc));
            }
        }
        Ok(out)
    }
}

/// True generating parameters for `simulate`; smoothness values come from
/// the `[model]` block so the simulation matches what a later fit assumes.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthBlock {
    pub beta: Vec<f64>,
    pub sigma2_w: f64,
    pub nugget_ratio: f64,
    pub sigma2_alpha: f64,
    pub rho_w: f64,
    pub rho_alpha: f64,
}

impl TruthBlock {
    pub fn to_state(&self, nu_w: f64, nu_alpha: f64) -> ModelState {
        ModelState {
            beta: self.beta.clone(),
            sigma2_w: self.sigma2_w,
            nugget_ratio: self.nugget_ratio,
            sigma2_alpha: self.sigma2_alpha,
            rho_w: self.rho_w,
            rho_alpha: self.rho_alpha,
            nu_w,
            nu_alpha,
        }
    }
}

/// Parse the config file and resolve `[paths]` entries relative to its
/// directory.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg: RunConfig = toml::from_str(&text)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    if let Some(paths) = cfg.paths.as_mut() {
        for p in [&mut paths.locations, &mut paths.response, &mut paths.remote_locations, &mut paths.remote]
        {
            rebase(p, base);
        }
        if let Some(k) = paths.knots.as_mut() {
            rebase(k, base);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn rebase(p: &mut PathBuf, base: &Path) {
    if p.is_relative() {
        *p = base.join(&p);
    }
}

impl RunConfig {
    /// Range checks that do not depend on the subcommand. Sampler numerics
    /// are checked here too so a bad `[sampler]` block fails as a config
    /// error even when it would first be exercised deep inside a worker.
    fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        for (name, v) in [("model.nu_w", m.nu_w), ("model.nu_alpha", m.nu_alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err(format!("{name} = {v} must be finite and positive")));
            }
        }
        if let Some(k) = m.eof_count {
            if k == 0 {
                return Err(config_err("model.eof_count must be at least 1"));
            }
        }
        if let Some(p) = &m.priors {
            for (name, pair) in [
                ("ig_w", p.ig_w),
                ("ig_eps", p.ig_eps),
                ("ig_alpha", p.ig_alpha),
            ] {
                if let Some((a, b)) = pair {
                    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                        return Err(config_err(format!(
                            "model.priors.{name} = ({a}, {b}): shape and rate must be positive"
                        )));
                    }
                }
            }
            for (name, pair) in
                [("rho_w_bounds", p.rho_w_bounds), ("rho_alpha_bounds", p.rho_alpha_bounds)]
            {
                if let Some((lo, hi)) = pair {
                    if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
                        return Err(config_err(format!(
                            "model.priors.{name} = ({lo}, {hi}): need 0 < lo < hi"
                        )));
                    }
                }
            }
            if let Some(v) = p.beta_var {
                if !(v.is_finite() && v > 0.0) {
                    return Err(config_err(format!(
                        "model.priors.beta_var = {v} must be positive"
                    )));
                }
            }
        }
        if let Some(s) = &self.sampler {
            if s.n_iter == 0 {
                return Err(config_err("sampler.n_iter must be positive"));
            }
            if s.n_burn >= s.n_iter {
                return Err(config_err(format!(
                    "sampler.n_burn = {} leaves no draws from n_iter = {}",
                    s.n_burn, s.n_iter
                )));
            }
            if s.thin == 0 {
                return Err(config_err("sampler.thin must be positive"));
            }
            if !(s.target_accept > 0.0 && s.target_accept < 1.0) {
                return Err(config_err(format!(
                    "sampler.target_accept = {} outside (0, 1)",
                    s.target_accept
                )));
            }
            if !(s.adapt_decay > 0.5 && s.adapt_decay <= 1.0) {
                return Err(config_err(format!(
                    "sampler.adapt_decay = {} outside (0.5, 1]",
                    s.adapt_decay
                )));
            }
            if s.checkpoint && s.checkpoint_every == 0 {
                return Err(config_err("sampler.checkpoint_every must be positive"));
            }
        }
        for (name, d) in [("compose", &self.compose), ("validate", &self.validate)] {
            if d.g < 2 {
                return Err(config_err(format!("{name}.g = {} needs at least 2 draws", d.g)));
            }
            if d.workers == 0 {
                return Err(config_err(format!("{name}.workers must be at least 1")));
            }
        }
        if let Some(p) = &self.predict {
            if p.g == 0 {
                return Err(config_err("predict.g must be at least 1"));
            }
            if p.workers == 0 {
                return Err(config_err("predict.workers must be at least 1"));
            }
        }
        if let Some(s) = &self.simulate {
            if s.n_t == 0 {
                return Err(config_err("simulate.n_t must be positive"));
            }
            if !(s.remote_rho.is_finite() && s.remote_rho > 0.0) {
                return Err(config_err(format!(
                    "simulate.remote_rho = {} must be positive",
                    s.remote_rho
                )));
            }
            if !(s.remote_nu.is_finite() && s.remote_nu > 0.0) {
                return Err(config_err(format!(
                    "simulate.remote_nu = {} must be positive",
                    s.remote_nu
                )));
            }
            if s.truth.beta.len() != 1 {
                return Err(config_err(format!(
                    "simulate.truth.beta has {} entries; the local design is intercept-only (one coefficient)",
                    s.truth.beta.len()
                )));
            }
        }
        Ok(())
    }

    /// The `[paths]` block, with every referenced file checked to exist.
    /// The check runs here (not at load time) so a config can drive
    /// `simulate` before the files it later feeds to `fit` are written.
    pub fn require_paths(&self) -> Result<&PathsConfig, CliError> {
        let paths = self
            .paths
            .as_ref()
            .ok_or_else(|| config_err("this command needs a [paths] block in the config"))?;
        let mut named = vec![
            ("paths.locations", &paths.locations),
            ("paths.response", &paths.response),
            ("paths.remote_locations", &paths.remote_locations),
            ("paths.remote", &paths.remote),
        ];
        if let Some(k) = &paths.knots {
            named.push(("paths.knots", k));
        }
        let missing: Vec<String> = named
            .iter()
            .filter(|(_, p)| !p.is_file())
            .map(|(name, p)| format!("{name} = {}", p.display()))
            .collect();
        if missing.is_empty() {
            Ok(paths)
        } else {
            Err(config_err(format!("input file(s) not found: {}", missing.join("; "))))
        }
    }

    pub fn require_sampler(&self) -> Result<&SamplerBlock, CliError> {
        self.sampler
            .as_ref()
            .ok_or_else(|| config_err("this command needs a [sampler] block in the config"))
    }

    pub fn require_simulate(&self) -> Result<&SimulateBlock, CliError> {
        self.simulate
            .as_ref()
            .ok_or_else(|| config_err("simulate needs a [simulate] block in the config"))
    }

    /// Priors for a `p`-column local design, config overrides applied.
    pub fn priors(&self, p: usize) -> Priors {
        let mut priors = Priors::default_for(p);
        if let Some(cfg) = &self.model.priors {
            if let Some(v) = cfg.beta_var {
                priors.beta_cov = Mat::identity(p).scale(v);
            }
            if let Some(pair) = cfg.ig_w {
                priors.ig_w = pair;
            }
            if let Some(pair) = cfg.ig_eps {
                priors.ig_eps = pair;
            }
            if let Some(pair) = cfg.ig_alpha {
                priors.ig_alpha = pair;
            }
            if let Some(pair) = cfg.rho_w_bounds {
                priors.rho_w_bounds = pair;
            }
            if let Some(pair) = cfg.rho_alpha_bounds {
                priors.rho_alpha_bounds = pair;
            }
        }
        priors
    }
}

impl SamplerBlock {
    /// Assemble the sampler settings for one run. `init` and `chain_id`
    /// flags override the config; the checkpoint file (when enabled) lives
    /// in the output directory.
    pub fn to_sampler_config(
        &self,
        seed: u64,
        out: &Path,
        init_flag: Option<InitStrategy>,
        chain_id_flag: Option<u64>,
    ) -> SamplerConfig {
        let mut cfg = SamplerConfig::new(self.n_iter, self.n_burn, seed);
        cfg.thin = self.thin;
        cfg.chain_id = chain_id_flag.unwrap_or(self.chain_id);
        cfg.target_accept = self.target_accept;
        cfg.adapt_decay = self.adapt_decay;
        cfg.init = init_flag.or(self.init).unwrap_or(InitStrategy::Default);
        cfg.checkpoint = self.checkpoint.then(|| out.join("chain.ckpt"));
        cfg.checkpoint_every = self.checkpoint_every;
        cfg
    }
}

impl KnotGridConfig {
    pub fn knots(&self) -> Result<Vec<Location>, CliError> {
        place_knot_grid(
            BBox {
                lon_min: self.lon_min,
                lon_max: self.lon_max,
                lat_min: self.lat_min,
                lat_max: self.lat_max,
            },
            self.count,
            |_| true,
        )
        .map_err(config_err)
    }
}

pub fn parse_init(s: &str) -> Result<InitStrategy, CliError> {
    match s {
        "default" => Ok(InitStrategy::Default),
        "random" => Ok(InitStrategy::Random),
        other => Err(config_err(format!(
            "unknown init strategy `{other}` (expected `default` or `random`)"
        ))),
    }
}

/// Output-directory precedence: `--out` flag, config `out`, `$RESP_OUT_DIR`,
/// then `resp-out` in the working directory.
pub fn resolve_out(flag: Option<PathBuf>, cfg_out: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p;
    }
    if let Some(p) = cfg_out {
        return p.to_path_buf();
    }
    if let Ok(p) = std::env::var("RESP_OUT_DIR") {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    PathBuf::from("resp-out")
}

pub fn require_seed(flag: Option<u64>, cfg: &RunConfig, command: &str) -> Result<u64, CliError> {
    flag.or(cfg.seed).ok_or_else(|| {
        config_err(format!("`{command}` needs a seed: set `seed` in the config or pass --seed"))
    })
}
