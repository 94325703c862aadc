//! `predict`: posterior predictive for one timepoint of the ingested series.
//!
//! Predictions are on the pipeline scale; when ingest standardized the
//! response, the CSV carries raw-scale columns alongside (mapped back per
//! location through the recorded means and standard deviations).

use super::{load_fit_artifacts, write_text, Ctx};
use crate::config::require_seed;
use crate::error::{config_err, from_posterior, CliError};
use crate::manifest::Manifest;
use resp_core::posteriorops::predict;
use std::fmt::Write as _;
use std::path::PathBuf;

pub fn run(ctx: &Ctx, fit_dir: Option<PathBuf>, time_flag: Option<String>) -> Result<(), CliError> {
    let fit_dir = fit_dir.unwrap_or_else(|| ctx.out.clone());
    let seed = require_seed(ctx.seed_flag, &ctx.cfg, "predict")?;
    let block = ctx.cfg.predict.as_ref();
    let time = time_flag
        .or_else(|| block.and_then(|b| b.time.clone()))
        .ok_or_else(|| config_err("predict needs a time label: set [predict].time or pass --time"))?;
    let g = block.map(|b| b.g).unwrap_or(200);
    let workers = ctx.workers_flag.unwrap_or_else(|| block.map(|b| b.workers).unwrap_or(1));

    let art = load_fit_artifacts(ctx, &fit_dir)?;
    let data = &art.ingested.dataset;
    let t = data.time_index.iter().position(|s| *s == time).ok_or_else(|| {
        config_err(format!(
            "time `{time}` is not in the ingested series ({} labels: {} … {})",
            data.n_t(),
            data.time_index.first().map(String::as_str).unwrap_or(""),
            data.time_index.last().map(String::as_str).unwrap_or(""),
        ))
    })?;
    let x_t0 = data.local_design[t].clone();
    let z_t0 = data.remote.values().col(t);
    let pred = predict(&art.chain, data, &art.builder, &x_t0, &z_t0, g, workers, seed)
        .map_err(from_posterior)?;

    let out = &ctx.out;
    let ids = &art.ingested.response_ids;
    let mut table = String::from("location_id,mean,sd,mean_raw,sd_raw\n");
    for (i, id) in ids.iter().enumerate() {
        let (mean_raw, sd_raw) = art.ingested.pipeline.response_raw(i, pred.mean[i], pred.sd[i]);
        let _ = writeln!(table, "{id},{},{},{},{}", pred.mean[i], pred.sd[i], mean_raw, sd_raw);
    }
    write_text(&out.join("predictive.csv"), &table)?;

    let mut draws = String::from("location_id");
    for j in 0..pred.draws.cols() {
        let _ = write!(draws, ",draw_{j}");
    }
    draws.push('\n');
    for (i, id) in ids.iter().enumerate() {
        let _ = write!(draws, "{id}");
        for j in 0..pred.draws.cols() {
            let _ = write!(draws, ",{}", pred.draws[(i, j)]);
        }
        draws.push('\n');
    }
    write_text(&out.join("draws.csv"), &draws)?;

    let mut m = Manifest::new("predict", Some(seed));
    m.identity = Some(art.identity);
    m.input_paths = art.input_paths;
    m.details = serde_json::json!({
        "time": time,
        "g": g,
        "workers": workers,
        "fit_dir": fit_dir.display().to_string(),
    });
    m.record_output(out, "predictive", "predictive.csv")?;
    m.record_output(out, "draws", "draws.csv")?;
    m.write(out)?;
    println!(
        "predict: {} locations at time {time} from {g} draws -> {}",
        ids.len(),
        out.join("predictive.csv").display()
    );
    Ok(())
}
