//! `simulate`: synthetic dataset generation from configured truth values.
//!
//! Writes the same five CSV files a real-data run would ingest (locations,
//! response, remote locations, remote series, knots) plus `truth.json`, so
//! a follow-up `fit` can point its `[paths]` at the output directory.

use super::{write_json_pretty, write_locations_csv, write_series_csv, Ctx};
use crate::config::require_seed;
use crate::error::{config_err, from_model, CliError};
use crate::manifest::Manifest;
use resp_core::covkernels::{Location, MaternParams};
use resp_core::resplike::{simulate, LocalDesignRule, RemoteFieldRule, SimulationConfig};

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let sim = cfg.require_simulate()?;
    let seed = require_seed(ctx.seed_flag, cfg, "simulate")?;
    let grid = cfg.model.knot_grid.as_ref().ok_or_else(|| {
        config_err("simulate places knots from [model.knot_grid]; add that block")
    })?;
    let knots = grid.knots()?;
    let response_named = sim.response_grid.locations("s")?;
    let remote_named = sim.remote_grid.locations("r")?;
    let truth = sim.truth.to_state(cfg.model.nu_w, cfg.model.nu_alpha);

    let sim_cfg = SimulationConfig {
        n_t: sim.n_t,
        remote_field: RemoteFieldRule::MaternDraw(
            MaternParams::new(1.0, sim.remote_rho, sim.remote_nu).map_err(config_err)?,
        ),
        design: LocalDesignRule::InterceptOnly,
        seed,
    };
    let locs: Vec<Location> = response_named.iter().map(|(_, l)| *l).collect();
    let rlocs: Vec<Location> = remote_named.iter().map(|(_, l)| *l).collect();
    let result = simulate(&truth, &locs, &rlocs, &knots, &sim_cfg).map_err(from_model)?;
    let data = &result.dataset;

    let knot_named: Vec<(String, Location)> =
        knots.iter().enumerate().map(|(j, k)| (format!("knot_{j}"), *k)).collect();
    let response_ids: Vec<String> = response_named.iter().map(|(id, _)| id.clone()).collect();
    let remote_ids: Vec<String> = remote_named.iter().map(|(id, _)| id.clone()).collect();

    let out = &ctx.out;
    write_locations_csv(&out.join("locations.csv"), &response_named)?;
    write_locations_csv(&out.join("remote_locations.csv"), &remote_named)?;
    write_locations_csv(&out.join("knots.csv"), &knot_named)?;
    write_series_csv(
        &out.join("response.csv"),
        &response_ids,
        &data.time_index,
        data.response.values(),
    )?;
    write_series_csv(&out.join("remote.csv"), &remote_ids, &data.time_index, data.remote.values())?;
    write_json_pretty(&out.join("truth.json"), &truth)?;

    let mut m = Manifest::new("simulate", Some(seed));
    m.details = serde_json::json!({
        "n_s": data.n_s(),
        "n_t": data.n_t(),
        "n_r": data.n_r(),
        "k": knots.len(),
        "design": "intercept_only",
        "remote_rho": sim.remote_rho,
        "remote_nu": sim.remote_nu,
    });
    for (key, name) in [
        ("locations", "locations.csv"),
        ("remote_locations", "remote_locations.csv"),
        ("knots", "knots.csv"),
        ("response", "response.csv"),
        ("remote", "remote.csv"),
        ("truth", "truth.json"),
    ] {
        m.record_output(out, key, name)?;
    }
    m.write(out)?;
    println!(
        "simulate: {} locations x {} times ({} remote, {} knots) -> {}",
        data.n_s(),
        data.n_t(),
        data.n_r(),
        knots.len(),
        out.display()
    );
    Ok(())
}
