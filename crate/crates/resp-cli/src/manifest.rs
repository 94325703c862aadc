//! Reproducibility manifests: every subcommand records what went in (by
//! content hash), what came out (by content hash), and the settings that
//! identify the run. `compose` and `predict` verify their current inputs
//! against the fit manifest before touching the chain; any drift is refused
//! with a per-file hash diff. The creation timestamp is the only field that
//! may differ between reruns of the same (config, seed).

use crate::error::{config_err, data_err, CliError};
use resp_core::covkernels::Location;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

/// The facts that make a chain reusable: the data it saw (by hash), whether
/// ingest standardized, and the model geometry (smoothness values and knot
/// coordinates). Sampler settings and seeds are provenance, not identity —
/// the chain file's own hash pins the draw history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Identity {
    /// Input name → content sha256.
    pub inputs: BTreeMap<String, String>,
    pub standardize: bool,
    /// sha256 over (ν_w, ν_α, knot ids and coordinates).
    pub model_sha256: String,
}

/// One output artifact: path relative to the output directory plus hash.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// Unix seconds at write time; the only rerun-variable field.
    pub created_unix: u64,
    pub seed: Option<u64>,
    pub identity: Option<Identity>,
    /// Input name → path as configured (informational; hashes live in
    /// `identity.inputs`).
    pub input_paths: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, OutputRecord>,
    /// Command-specific payload (sampler settings, dims, acceptance rates…).
    pub details: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>) -> Manifest {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            created_unix,
            seed,
            identity: None,
            input_paths: BTreeMap::new(),
            outputs: BTreeMap::new(),
            details: serde_json::Value::Null,
        }
    }

    /// Hash and record the output file `out/<name>` under `key`.
    pub fn record_output(&mut self, out: &Path, key: &str, name: &str) -> Result<(), CliError> {
        let sha256 = sha256_file(&out.join(name))?;
        self.outputs.insert(key.to_string(), OutputRecord { path: name.to_string(), sha256 });
        Ok(())
    }

    /// Write `<command>_manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}_manifest.json", self.command));
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| config_err(format!("manifest serialization: {e}")))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        config_err(format!(
            "cannot read manifest {}: {e}; run the producing command first",
            path.display()
        ))
    })?;
    serde_json::from_str(&text).map_err(|e| data_err(format!("{}: {e}", path.display())))
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut file =
        std::fs::File::open(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Canonical hash of the model geometry. `{:?}` prints f64 in shortest
/// round-trip form, so equal values always hash equally.
pub fn model_sha256(nu_w: f64, nu_alpha: f64, knot_ids: &[String], knots: &[Location]) -> String {
    let mut text = format!("nu_w={nu_w:?};nu_alpha={nu_alpha:?};knots=");
    for (id, k) in knot_ids.iter().zip(knots) {
        let _ = write!(text, "[{id}:{:?},{:?}]", k.lon, k.lat);
    }
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hex(&hasher.finalize())
}

/// Compare the identity a consumer just computed against what the fit
/// recorded. On mismatch, list each differing component with both hashes.
pub fn verify_identity(current: &Identity, recorded: &Identity) -> Result<(), CliError> {
    if current == recorded {
        return Ok(());
    }
    let mut lines = Vec::new();
    let names: std::collections::BTreeSet<&String> =
        current.inputs.keys().chain(recorded.inputs.keys()).collect();
    for name in names {
        let now = current.inputs.get(name).map(String::as_str).unwrap_or("<absent>");
        let then = recorded.inputs.get(name).map(String::as_str).unwrap_or("<absent>");
        if now != then {
            lines.push(format!("{name}: fit saw {then}, current is {now}"));
        }
    }
    if current.standardize != recorded.standardize {
        lines.push(format!(
            "standardize: fit used {}, current config says {}",
            recorded.standardize, current.standardize
        ));
    }
    if current.model_sha256 != recorded.model_sha256 {
        lines.push(format!(
            "model (smoothness/knots): fit hash {}, current hash {}",
            recorded.model_sha256, current.model_sha256
        ));
    }
    Err(config_err(format!("fit manifest mismatch — {}", lines.join("; "))))
}

/// Confirm a previously recorded output file is still byte-identical.
pub fn verify_output(dir: &Path, manifest: &Manifest, name: &str) -> Result<PathBuf, CliError> {
    let rec = manifest.outputs.get(name).ok_or_else(|| {
        config_err(format!(
            "manifest for `{}` records no `{name}` output; rerun it",
            manifest.command
        ))
    })?;
    let path = dir.join(&rec.path);
    let now = sha256_file(&path)?;
    if now != rec.sha256 {
        return Err(config_err(format!(
            "fit manifest mismatch — {}: recorded {}, file on disk is {now}",
            rec.path, rec.sha256
        )));
    }
    Ok(path)
}
