//! Subcommand implementations and the plumbing they share.

pub mod compose;
pub mod eofs;
pub mod fit;
pub mod predict;
pub mod report;
pub mod simulate;
pub mod validate;

use crate::config::{PathsConfig, RunConfig};
use crate::error::{config_err, data_err, from_gibbs, from_rank, CliError};
use crate::ingest::{ingest, resolve_knots, Ingested, Scope};
use crate::manifest::{
    model_sha256, read_manifest, sha256_file, verify_identity, verify_output, Identity,
};
use resp_core::covkernels::Location;
use resp_core::gibbs::{read_chain_csv, AcceptStats, Chain, SamplerConfig, ScaleReport};
use resp_core::kronlinalg::Mat;
use resp_core::reducedrank::BasisBuilder;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Flag-merged run context, resolved once in `main`.
pub struct Ctx {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub seed_flag: Option<u64>,
    pub workers_flag: Option<usize>,
}

/// Hash the configured input files and the model geometry into the identity
/// that ties a fit to its consumers, plus the path map for the manifest.
pub fn build_identity(
    paths: &PathsConfig,
    standardize: bool,
    nu_w: f64,
    nu_alpha: f64,
    knot_ids: &[String],
    knots: &[Location],
) -> Result<(Identity, BTreeMap<String, String>), CliError> {
    let mut inputs = BTreeMap::new();
    let mut input_paths = BTreeMap::new();
    let mut named: Vec<(&str, &Path)> = vec![
        ("locations", &paths.locations),
        ("response", &paths.response),
        ("remote_locations", &paths.remote_locations),
        ("remote", &paths.remote),
    ];
    if let Some(k) = &paths.knots {
        named.push(("knots", k));
    }
    for (name, path) in named {
        inputs.insert(name.to_string(), sha256_file(path)?);
        input_paths.insert(name.to_string(), path.display().to_string());
    }
    let identity = Identity {
        inputs,
        standardize,
        model_sha256: model_sha256(nu_w, nu_alpha, knot_ids, knots),
    };
    Ok((identity, input_paths))
}

/// Everything `compose` and `predict` reconstruct from a prior fit: the
/// verified chain, the re-ingested dataset, and the matching basis builder.
pub struct FitArtifacts {
    pub chain: Chain,
    pub ingested: Ingested,
    pub builder: BasisBuilder,
    pub knot_ids: Vec<String>,
    pub identity: Identity,
    pub input_paths: BTreeMap<String, String>,
}

/// Load `fit_manifest.json` from `fit_dir`, re-ingest the configured data,
/// and refuse (with a hash diff) if anything the chain depends on changed.
pub fn load_fit_artifacts(ctx: &Ctx, fit_dir: &Path) -> Result<FitArtifacts, CliError> {
    let cfg = &ctx.cfg;
    let paths = cfg.require_paths()?;
    let manifest = read_manifest(&fit_dir.join("fit_manifest.json"))?;
    if manifest.command != "fit" {
        return Err(config_err(format!(
            "{} is a `{}` manifest, expected `fit`",
            fit_dir.join("fit_manifest.json").display(),
            manifest.command
        )));
    }
    let ingested = ingest(paths, cfg.standardize, Scope::Full)?;
    let (knot_ids, knots) = resolve_knots(paths.knots.as_deref(), cfg.model.knot_grid.as_ref())?;
    let (identity, input_paths) = build_identity(
        paths,
        cfg.standardize,
        cfg.model.nu_w,
        cfg.model.nu_alpha,
        &knot_ids,
        &knots,
    )?;
    let recorded = manifest
        .identity
        .as_ref()
        .ok_or_else(|| config_err("fit manifest carries no identity block; rerun `fit`"))?;
    verify_identity(&identity, recorded)?;
    let chain_path = verify_output(fit_dir, &manifest, "chain")?;

    let sampler: SamplerConfig = serde_json::from_value(
        manifest.details.get("sampler").cloned().unwrap_or(serde_json::Value::Null),
    )
    .map_err(|e| config_err(format!("fit manifest lacks usable sampler details: {e}")))?;
    let scales: ScaleReport = manifest
        .details
        .get("scales")
        .cloned()
        .and_then(|v| serde_json::from_value(v).ok())
        .unwrap_or(ScaleReport { rho_w: 1.0, nugget_ratio: 1.0, sigma2_alpha: 1.0, rho_alpha: 1.0 });
    let (iters, states, logliks) =
        read_chain_csv(&chain_path, cfg.model.nu_w, cfg.model.nu_alpha).map_err(from_gibbs)?;
    let chain = Chain {
        states,
        logliks,
        iters,
        accept: AcceptStats::default(),
        scales,
        seed: sampler.seed,
        chain_id: sampler.chain_id,
        n_iter: sampler.n_iter,
        n_burn: sampler.n_burn,
        thin: sampler.thin,
    };
    if chain.is_empty() {
        return Err(data_err(format!("{}: chain has no draws", chain_path.display())));
    }
    let builder =
        BasisBuilder::new(ingested.dataset.remote.clone(), knots, cfg.model.nu_alpha)
            .map_err(from_rank)?;
    Ok(FitArtifacts { chain, ingested, builder, knot_ids, identity, input_paths })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| data_err(format!("{}: {e}", path.display())))
}

pub fn write_json_pretty(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

/// `id,lon,lat` in the given order; floats in shortest round-trip form.
pub fn write_locations_csv(path: &Path, named: &[(String, Location)]) -> Result<(), CliError> {
    let mut text = String::from("id,lon,lat\n");
    for (id, loc) in named {
        text.push_str(&format!("{id},{},{}\n", loc.lon, loc.lat));
    }
    write_text(path, &text)
}

/// Long-format series, time-major: all locations for the first time label,
/// then the next. Floats in shortest round-trip form, so reading the file
/// back reproduces the matrix bit for bit.
pub fn write_series_csv(
    path: &Path,
    ids: &[String],
    times: &[String],
    values: &Mat,
) -> Result<(), CliError> {
    let mut text = String::from("location_id,time,value\n");
    for (t, label) in times.iter().enumerate() {
        for (i, id) in ids.iter().enumerate() {
            text.push_str(&format!("{id},{label},{}\n", values[(i, t)]));
        }
    }
    write_text(path, &text)
}
