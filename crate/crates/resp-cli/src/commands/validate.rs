//! `validate`: leave-one-year-out skill against the climatology reference.
//!
//! Ingest is deliberately raw here (pivot and the deterministic `1/n_r`
//! remote scale only): each fold standardizes response and remote from its
//! own training years, so no held-out value ever reaches the training scale
//! or the tercile cutpoints.

use super::{build_identity, Ctx};
use crate::config::require_seed;
use crate::error::{from_assess, numerical_err, CliError};
use crate::ingest::{ingest, resolve_knots, Scope};
use crate::manifest::Manifest;
use resp_core::assess::{loo_validate, write_skill_csv, write_skill_summary, LooModel, MetricsConfig};

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let paths = cfg.require_paths()?;
    let sampler_block = cfg.require_sampler()?;
    let seed = require_seed(ctx.seed_flag, cfg, "validate")?;
    let g = cfg.validate.g;
    let workers = ctx.workers_flag.unwrap_or(cfg.validate.workers);

    let ing = ingest(paths, cfg.standardize, Scope::PerFold)?;
    let (knot_ids, knots) = resolve_knots(paths.knots.as_deref(), cfg.model.knot_grid.as_ref())?;
    // Folds share one sampler configuration; a shared checkpoint path would
    // race, so checkpointing stays off during validation.
    let mut sampler_cfg = sampler_block.to_sampler_config(seed, &ctx.out, None, None);
    sampler_cfg.checkpoint = None;
    let model = LooModel {
        knots: knots.clone(),
        nu_w: cfg.model.nu_w,
        nu_alpha: cfg.model.nu_alpha,
        priors: cfg.priors(ing.dataset.p()),
    };
    let metrics = MetricsConfig { g, workers, seed, standardize: cfg.standardize };

    let outcome = loo_validate(&ing.dataset, &model, &sampler_cfg, &metrics).map_err(from_assess)?;
    for f in &outcome.failures {
        log::warn!("fold {} failed: {}", f.year, f.error);
    }
    if outcome.reports.is_empty() {
        let first = outcome
            .failures
            .first()
            .map(|f| format!("{}: {}", f.year, f.error))
            .unwrap_or_else(|| "no folds".into());
        return Err(numerical_err(format!("every fold failed; first failure — {first}")));
    }

    let out = &ctx.out;
    write_skill_csv(&out.join("skill.csv"), &outcome.reports).map_err(from_assess)?;
    write_skill_summary(&out.join("skill_summary.json"), &outcome).map_err(from_assess)?;

    let (identity, input_paths) = build_identity(
        paths,
        cfg.standardize,
        cfg.model.nu_w,
        cfg.model.nu_alpha,
        &knot_ids,
        &knots,
    )?;
    let mut m = Manifest::new("validate", Some(seed));
    m.identity = Some(identity);
    m.input_paths = input_paths;
    m.details = serde_json::json!({
        "g": g,
        "workers": workers,
        "sampler": sampler_cfg,
        "standardization_scope": "per-fold training years",
        "years_scored": outcome.reports.len() / 2,
        "years_failed": outcome.failures.len(),
    });
    m.record_output(out, "skill", "skill.csv")?;
    m.record_output(out, "skill_summary", "skill_summary.json")?;
    m.write(out)?;
    println!(
        "validate: {} years scored ({} failed) -> {}",
        outcome.reports.len() / 2,
        outcome.failures.len(),
        out.join("skill.csv").display()
    );
    Ok(())
}
