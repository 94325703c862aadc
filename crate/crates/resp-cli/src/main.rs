//! `resp` — spatial regression with remote (teleconnection) effects.
//!
//! Subcommands cover the full pipeline: `simulate` synthetic data, `fit`
//! the sampler, `compose` coefficient summaries, `eofs` remote patterns,
//! `predict` one timepoint, `validate` leave-one-year-out skill, `report`
//! score tables and an SVG. Outputs land in one directory with a manifest
//! per command; exit codes are 0 (ok), 2 (config), 3 (data), 4 (numerical),
//! and failures print a single JSON line on stderr.

mod commands;
mod config;
mod error;
mod ingest;
mod manifest;

use clap::{Parser, Subcommand};
use commands::Ctx;
use config::{load_config, resolve_out};
use error::{config_err, data_err, CliError};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "resp",
    version,
    about = "Spatial regression with remote (teleconnection) effects"
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory (overrides config `out` and $RESP_OUT_DIR).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base RNG seed (overrides config `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for the invoked command (overrides config).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset from configured truth values.
    Simulate,
    /// Run the sampler on the configured data and write the chain.
    Fit {
        /// Start-point strategy: `default` or `random`.
        #[arg(long)]
        init: Option<String>,
        /// Chain identifier (RNG stream; overrides config).
        #[arg(long)]
        chain_id: Option<u64>,
    },
    /// Composition-sample teleconnection coefficients from a fitted chain.
    Compose {
        /// Directory holding the fit artifacts (default: the output dir).
        #[arg(long, value_name = "DIR")]
        fit: Option<PathBuf>,
    },
    /// Leading EOF patterns of the (standardized) remote field.
    Eofs,
    /// Posterior predictive for one timepoint of the series.
    Predict {
        /// Directory holding the fit artifacts (default: the output dir).
        #[arg(long, value_name = "DIR")]
        fit: Option<PathBuf>,
        /// Time label to predict (overrides `[predict].time`).
        #[arg(long)]
        time: Option<String>,
    },
    /// Leave-one-year-out skill validation against climatology.
    Validate,
    /// Render score tables and an SVG summary from validation output.
    Report {
        /// Directory holding skill.csv (default: the output dir).
        #[arg(long, value_name = "DIR")]
        from: Option<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{}", e.to_json_line());
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = cli.config.as_deref().map(load_config).transpose()?;
    let out = resolve_out(cli.out, cfg.as_ref().and_then(|c| c.out.as_deref()));
    std::fs::create_dir_all(&out)
        .map_err(|e| data_err(format!("cannot create output dir {}: {e}", out.display())))?;

    // `report` only reads prior outputs; it works without a config.
    if let Cmd::Report { from } = cli.command {
        return commands::report::run(&out, from);
    }
    let cfg = cfg.ok_or_else(|| config_err("this command needs --config <FILE>"))?;
    let ctx = Ctx { cfg, out, seed_flag: cli.seed, workers_flag: cli.workers };
    match cli.command {
        Cmd::Simulate => commands::simulate::run(&ctx),
        Cmd::Fit { init, chain_id } => commands::fit::run(&ctx, init, chain_id),
        Cmd::Compose { fit } => commands::compose::run(&ctx, fit),
        Cmd::Eofs => commands::eofs::run(&ctx),
        Cmd::Predict { fit, time } => commands::predict::run(&ctx, fit, time),
        Cmd::Validate => commands::validate::run(&ctx),
        Cmd::Report { .. } => unreachable!("handled above"),
    }
}
