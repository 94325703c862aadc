//! `compose`: composition-sample the teleconnection coefficients from a
//! fitted chain and persist their normal summary.

use super::{load_fit_artifacts, write_json_pretty, Ctx};
use crate::config::require_seed;
use crate::error::{from_posterior, CliError};
use crate::manifest::Manifest;
use resp_core::posteriorops::{compose_alpha, write_cov_binary, write_means_csv};
use std::path::PathBuf;

pub fn run(ctx: &Ctx, fit_dir: Option<PathBuf>) -> Result<(), CliError> {
    let fit_dir = fit_dir.unwrap_or_else(|| ctx.out.clone());
    let seed = require_seed(ctx.seed_flag, &ctx.cfg, "compose")?;
    let g = ctx.cfg.compose.g;
    let workers = ctx.workers_flag.unwrap_or(ctx.cfg.compose.workers);
    let art = load_fit_artifacts(ctx, &fit_dir)?;

    let mut post =
        compose_alpha(&art.chain, &art.ingested.dataset, &art.builder, g, workers, seed)
            .map_err(from_posterior)?;
    post.location_ids = art.ingested.response_ids.clone();
    post.knot_ids = art.knot_ids.clone();

    let out = &ctx.out;
    write_means_csv(&out.join("alpha_mean.csv"), &post).map_err(from_posterior)?;
    write_cov_binary(&out.join("alpha_cov.bin"), &post.cov).map_err(from_posterior)?;
    let significant = (0..post.dim()).filter(|&i| post.significant(i)).count();
    write_json_pretty(
        &out.join("alpha.json"),
        &serde_json::json!({
            "dim": post.dim(),
            "n_draws": post.n_draws,
            "significant": significant,
            "locations": post.location_ids.len(),
            "knots": post.knot_ids.len(),
        }),
    )?;

    let mut m = Manifest::new("compose", Some(seed));
    m.identity = Some(art.identity);
    m.input_paths = art.input_paths;
    m.details = serde_json::json!({
        "g": g,
        "workers": workers,
        "fit_dir": fit_dir.display().to_string(),
        "chain_draws": art.chain.len(),
    });
    m.record_output(out, "alpha_mean", "alpha_mean.csv")?;
    m.record_output(out, "alpha_cov", "alpha_cov.bin")?;
    m.record_output(out, "alpha_summary", "alpha.json")?;
    m.write(out)?;
    println!(
        "compose: {} coefficients from {} draws ({} significant at 95%) -> {}",
        post.dim(),
        post.n_draws,
        significant,
        out.join("alpha_mean.csv").display()
    );
    Ok(())
}
