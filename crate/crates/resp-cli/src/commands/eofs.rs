//! `eofs`: leading empirical orthogonal functions of the remote field.
//!
//! Requires a centered series, which the standardization pipeline provides;
//! with `standardize = false` the input must already be anomalies or the
//! decomposition is refused.

use super::{build_identity, write_text, Ctx};
use crate::error::{config_err, from_rank, CliError};
use crate::ingest::{ingest, Scope};
use crate::manifest::Manifest;
use resp_core::reducedrank::compute_eofs;
use std::fmt::Write as _;

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let paths = cfg.require_paths()?;
    let count = cfg
        .model
        .eof_count
        .ok_or_else(|| config_err("eofs needs `model.eof_count` in the config"))?;
    let ing = ingest(paths, cfg.standardize, Scope::Full)?;
    let basis = compute_eofs(&ing.dataset.remote, count).map_err(from_rank)?;

    let out = &ctx.out;
    let header: String = (0..count).fold(String::new(), |mut s, l| {
        let _ = write!(s, ",eof_{l}");
        s
    });

    let mut patterns = format!("location_id{header}\n");
    for (i, id) in ing.remote_ids.iter().enumerate() {
        let _ = write!(patterns, "{id}");
        for l in 0..count {
            let _ = write!(patterns, ",{}", basis.patterns[(i, l)]);
        }
        patterns.push('\n');
    }
    write_text(&out.join("eof_patterns.csv"), &patterns)?;

    let mut scores = format!("time{header}\n");
    for (t, label) in ing.dataset.time_index.iter().enumerate() {
        let _ = write!(scores, "{label}");
        for l in 0..count {
            let _ = write!(scores, ",{}", basis.scores[(l, t)]);
        }
        scores.push('\n');
    }
    write_text(&out.join("eof_scores.csv"), &scores)?;

    let mut explained = String::from("eof,fraction\n");
    for (l, frac) in basis.explained.iter().enumerate() {
        let _ = writeln!(explained, "eof_{l},{frac}");
    }
    write_text(&out.join("eof_explained.csv"), &explained)?;

    let (identity, input_paths) =
        build_identity(paths, cfg.standardize, cfg.model.nu_w, cfg.model.nu_alpha, &[], &[])?;
    let mut m = Manifest::new("eofs", None);
    m.identity = Some(identity);
    m.input_paths = input_paths;
    m.details = serde_json::json!({
        "eof_count": count,
        "explained": basis.explained,
        "n_r": ing.dataset.n_r(),
        "n_t": ing.dataset.n_t(),
    });
    m.record_output(out, "patterns", "eof_patterns.csv")?;
    m.record_output(out, "scores", "eof_scores.csv")?;
    m.record_output(out, "explained", "eof_explained.csv")?;
    m.write(out)?;
    println!(
        "eofs: {count} patterns explaining {:.1}% of variance -> {}",
        100.0 * basis.explained.iter().sum::<f64>(),
        out.join("eof_patterns.csv").display()
    );
    Ok(())
}
