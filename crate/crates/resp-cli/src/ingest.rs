//! CSV ingestion and the anomaly pipeline.
//!
//! Locations arrive as `id,lon,lat`, series as long-format
//! `location_id,time,value` with every (location, time) cell present.
//! Time order is the order of first appearance in the response file; the
//! remote series must cover exactly the same time labels and is reordered
//! to match. The pipeline then standardizes per location (full scope for
//! `fit`/`compose`/`predict`/`eofs`; `validate` defers to its per-fold
//! training-only pipeline) and always scales the remote field by `1/n_r`.

use crate::config::PathsConfig;
use crate::error::{data_err, CliError};
use resp_core::assess::location_stats;
use resp_core::covkernels::Location;
use resp_core::kronlinalg::Mat;
use resp_core::resplike::{Dataset, GridSeries};
use serde::Serialize;
use std::collections::HashMap;
use std::path::Path;

/// Named point set from a `id,lon,lat` file.
#[derive(Clone, Debug)]
pub struct NamedLocations {
    pub ids: Vec<String>,
    pub locations: Vec<Location>,
}

/// Per-location standardization constants, kept for export and for mapping
/// predictions back to the raw scale.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesStats {
    pub ids: Vec<String>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// What was done to the raw values, recorded next to every artifact so the
/// training scope is explicit.
#[derive(Clone, Debug, Serialize)]
pub struct AnomalyPipeline {
    pub standardize: bool,
    /// `full` (all timepoints), `per-fold` (validate: training years only,
    /// applied downstream), or `none`.
    pub scope: &'static str,
    /// Remote covariate scale factor `1/n_r`, applied after any
    /// standardization.
    pub remote_scale: f64,
    pub response: Option<SeriesStats>,
    pub remote: Option<SeriesStats>,
}

impl AnomalyPipeline {
    /// Map a standardized-scale prediction for location row `i` back to the
    /// raw response scale; identity when no stats were applied.
    pub fn response_raw(&self, i: usize, mean: f64, sd: f64) -> (f64, f64) {
        match &self.response {
            Some(st) => (st.mean[i] + st.sd[i] * mean, st.sd[i] * sd),
            None => (mean, sd),
        }
    }
}

/// Which standardization scope this ingest serves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scope {
    /// Center/scale per location over all timepoints.
    Full,
    /// Leave values unstandardized here; a per-fold pipeline owns it.
    PerFold,
}

/// Everything a subcommand needs from the input files.
#[derive(Debug)]
pub struct Ingested {
    pub dataset: Dataset,
    pub response_ids: Vec<String>,
    pub remote_ids: Vec<String>,
    pub pipeline: AnomalyPipeline,
}

fn bad_row(path: &Path, line: u64, msg: impl std::fmt::Display) -> CliError {
    data_err(format!("{}:{line}: {msg}", path.display()))
}

fn record_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

/// Read an `id,lon,lat` file; ids must be unique and coordinates valid.
pub fn read_locations(path: &Path) -> Result<NamedLocations, CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let expect = ["id", "lon", "lat"];
    if headers.iter().collect::<Vec<_>>() != expect {
        return Err(bad_row(path, 1, format!("header must be `id,lon,lat`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut ids = Vec::new();
    let mut locations = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(format!("{}: {e}", path.display())))?;
        let line = record_line(&rec);
        if rec.len() != 3 {
            return Err(bad_row(path, line, format!("expected 3 fields, got {}", rec.len())));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(bad_row(path, line, "empty location id"));
        }
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(bad_row(path, line, format!("duplicate id `{id}` (first at line {first})")));
        }
        let lon: f64 = rec[1]
            .parse()
            .map_err(|_| bad_row(path, line, format!("bad lon `{}`", &rec[1])))?;
        let lat: f64 = rec[2]
            .parse()
            .map_err(|_| bad_row(path, line, format!("bad lat `{}`", &rec[2])))?;
        let loc = Location::new(lon, lat).map_err(|e| bad_row(path, line, e))?;
        ids.push(id);
        locations.push(loc);
    }
    if ids.is_empty() {
        return Err(data_err(format!("{}: no locations", path.display())));
    }
    Ok(NamedLocations { ids, locations })
}

/// Long-format series pivoted to a `n_loc × n_t` matrix. Row order follows
/// `ids`; time order is first appearance in the file. Every cell must be
/// present exactly once.
pub struct SeriesTable {
    pub times: Vec<String>,
    pub values: Mat,
}

pub fn read_series(path: &Path, ids: &[String]) -> Result<SeriesTable, CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let expect = ["location_id", "time", "value"];
    if headers.iter().collect::<Vec<_>>() != expect {
        return Err(bad_row(path, 1, format!("header must be `location_id,time,value`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let row_of: HashMap<&str, usize> =
        ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let mut times: Vec<String> = Vec::new();
    let mut col_of: HashMap<String, usize> = HashMap::new();
    // (row, col) → (value, line); sized lazily since n_t is unknown upfront.
    let mut cells: HashMap<(usize, usize), (f64, u64)> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(format!("{}: {e}", path.display())))?;
        let line = record_line(&rec);
        if rec.len() != 3 {
            return Err(bad_row(path, line, format!("expected 3 fields, got {}", rec.len())));
        }
        let row = *row_of.get(&rec[0]).ok_or_else(|| {
            bad_row(path, line, format!("unknown location id `{}`", &rec[0]))
        })?;
        let time = rec[1].to_string();
        if time.is_empty() {
            return Err(bad_row(path, line, "empty time label"));
        }
        let col = *col_of.entry(time.clone()).or_insert_with(|| {
            times.push(time);
            times.len() - 1
        });
        let value: f64 = rec[2]
            .parse()
            .map_err(|_| bad_row(path, line, format!("bad value `{}`", &rec[2])))?;
        if !value.is_finite() {
            return Err(bad_row(path, line, format!("non-finite value `{}`", &rec[2])));
        }
        if let Some((_, first)) = cells.insert((row, col), (value, line)) {
            return Err(bad_row(
                path,
                line,
                format!("duplicate cell ({}, {}) (first at line {first})", &rec[0], &rec[1]),
            ));
        }
    }
    if times.is_empty() {
        return Err(data_err(format!("{}: no rows", path.display())));
    }
    let mut missing = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        for (t, label) in times.iter().enumerate() {
            if !cells.contains_key(&(i, t)) {
                missing.push(format!("({id}, {label})"));
            }
        }
    }
    if !missing.is_empty() {
        let shown = missing.iter().take(5).cloned().collect::<Vec<_>>().join(", ");
        let suffix = if missing.len() > 5 {
            format!(" and {} more", missing.len() - 5)
        } else {
            String::new()
        };
        return Err(data_err(format!(
            "{}: {} missing cells: {shown}{suffix}",
            path.display(),
            missing.len()
        )));
    }
    let values = Mat::from_fn(ids.len(), times.len(), |i, t| cells[&(i, t)].0);
    Ok(SeriesTable { times, values })
}

/// Check the remote series covers exactly the response's time labels and
/// reorder its columns to the response order. A set mismatch is reported as
/// a two-sided diff.
fn align_times(
    response: &SeriesTable,
    remote: SeriesTable,
    response_path: &Path,
    remote_path: &Path,
) -> Result<Mat, CliError> {
    let col_of: HashMap<&str, usize> =
        remote.times.iter().enumerate().map(|(t, s)| (s.as_str(), t)).collect();
    let mut only_response: Vec<&str> = response
        .times
        .iter()
        .map(String::as_str)
        .filter(|t| !col_of.contains_key(*t))
        .collect();
    let resp_set: std::collections::HashSet<&str> =
        response.times.iter().map(String::as_str).collect();
    let mut only_remote: Vec<&str> =
        remote.times.iter().map(String::as_str).filter(|t| !resp_set.contains(*t)).collect();
    if !only_response.is_empty() || !only_remote.is_empty() {
        only_response.sort_unstable();
        only_remote.sort_unstable();
        let cap = |v: &[&str]| {
            let shown = v.iter().take(8).cloned().collect::<Vec<_>>().join(", ");
            if v.len() > 8 {
                format!("{shown}, … ({} total)", v.len())
            } else {
                shown
            }
        };
        return Err(data_err(format!(
            "time indices differ: only in {}: [{}]; only in {}: [{}]",
            response_path.display(),
            cap(&only_response),
            remote_path.display(),
            cap(&only_remote),
        )));
    }
    let n_r = remote.values.rows();
    Ok(Mat::from_fn(n_r, response.times.len(), |i, t| {
        remote.values[(i, col_of[response.times[t].as_str()])]
    }))
}

fn apply_stats(values: &mut Mat, stats: &SeriesStats) {
    for i in 0..values.rows() {
        for t in 0..values.cols() {
            values[(i, t)] = (values[(i, t)] - stats.mean[i]) / stats.sd[i];
        }
    }
}

fn full_scope_stats(
    values: &Mat,
    ids: &[String],
    what: &'static str,
) -> Result<SeriesStats, CliError> {
    let cols: Vec<usize> = (0..values.cols()).collect();
    let st = location_stats(values, &cols, what).map_err(data_err)?;
    Ok(SeriesStats { ids: ids.to_vec(), mean: st.mean, sd: st.sd })
}

/// Warn (never fail) when unstandardized input does not look like anomalies.
fn warn_if_off_center(values: &Mat, what: &str) {
    let n_t = values.cols().max(1) as f64;
    let mut max_mean: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    for i in 0..values.rows() {
        let mean = values.row(i).iter().sum::<f64>() / n_t;
        max_mean = max_mean.max(mean.abs());
        for v in values.row(i) {
            max_abs = max_abs.max(v.abs());
        }
    }
    if max_mean > 1e-3 * max_abs.max(1.0) {
        log::warn!(
            "{what}: per-location means reach {max_mean:.3} although standardization is off; \
             values are used as-is"
        );
    }
}

/// Read all four data files and assemble the model dataset (intercept-only
/// local design). See the module docs for the pipeline rules.
pub fn ingest(paths: &PathsConfig, standardize: bool, scope: Scope) -> Result<Ingested, CliError> {
    let response_locs = read_locations(&paths.locations)?;
    let remote_locs = read_locations(&paths.remote_locations)?;
    let response_table = read_series(&paths.response, &response_locs.ids)?;
    let remote_table = read_series(&paths.remote, &remote_locs.ids)?;
    let mut response_values = response_table.values.clone();
    let remote_aligned =
        align_times(&response_table, remote_table, &paths.response, &paths.remote)?;
    let mut remote_values = remote_aligned;

    let n_r = remote_locs.ids.len();
    let remote_scale = 1.0 / n_r as f64;
    let pipeline = if standardize && scope == Scope::Full {
        let resp_stats = full_scope_stats(&response_values, &response_locs.ids, "response")?;
        let rem_stats = full_scope_stats(&remote_values, &remote_locs.ids, "remote field")?;
        apply_stats(&mut response_values, &resp_stats);
        apply_stats(&mut remote_values, &rem_stats);
        AnomalyPipeline {
            standardize: true,
            scope: "full",
            remote_scale,
            response: Some(resp_stats),
            remote: Some(rem_stats),
        }
    } else if standardize {
        AnomalyPipeline {
            standardize: true,
            scope: "per-fold",
            remote_scale,
            response: None,
            remote: None,
        }
    } else {
        warn_if_off_center(&response_values, "response");
        warn_if_off_center(&remote_values, "remote field");
        AnomalyPipeline {
            standardize: false,
            scope: "none",
            remote_scale,
            response: None,
            remote: None,
        }
    };
    for v in remote_values.as_mut_slice() {
        *v *= remote_scale;
    }

    let n_s = response_locs.ids.len();
    let n_t = response_table.times.len();
    let design = vec![Mat::from_fn(n_s, 1, |_, _| 1.0); n_t];
    let dataset = Dataset::new(
        GridSeries::new(response_locs.locations, response_values).map_err(data_err)?,
        design,
        GridSeries::new(remote_locs.locations, remote_values).map_err(data_err)?,
        response_table.times,
    )
    .map_err(data_err)?;
    Ok(Ingested {
        dataset,
        response_ids: response_locs.ids,
        remote_ids: remote_locs.ids,
        pipeline,
    })
}

/// Knot source: a `[paths] knots` file or the `[model.knot_grid]` block —
/// exactly one of the two.
pub fn resolve_knots(
    knots_file: Option<&Path>,
    knot_grid: Option<&crate::config::KnotGridConfig>,
) -> Result<(Vec<String>, Vec<Location>), CliError> {
    match (knots_file, knot_grid) {
        (Some(_), Some(_)) => Err(crate::error::config_err(
            "both `paths.knots` and `[model.knot_grid]` are set; pick one knot source",
        )),
        (None, None) => Err(crate::error::config_err(
            "no knot source: set `paths.knots` or a `[model.knot_grid]` block",
        )),
        (Some(path), None) => {
            let named = read_locations(path)?;
            Ok((named.ids, named.locations))
        }
        (None, Some(grid)) => {
            let knots = grid.knots()?;
            let ids = (0..knots.len()).map(|j| format!("knot_{j}")).collect();
            Ok((ids, knots))
        }
    }
}
