// Copyright 2026 cqbsim Contributors
// SPDX-License-Identifier: Apache-2.0

//! Named experiments, their configuration, and result manifests.
//!
//! Every experiment produces its output files in memory, then writes them
//! next to a `manifest.json`. Parallel work runs on a dedicated rayon pool
//! of the requested size; results are collected in index order, so output
//! bytes do not depend on the worker count.

mod commands;
pub mod scan2d;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::device::{CqbSpec, TwoCqbSpec};
use crate::error::{Error, Result};

pub use scan2d::{interference_map, single_pulse_excitation, ContourPoint, InterferenceMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentId {
    Scan2d,
    Calibrate,
    Rb,
    Coherence,
    Init,
    Cz,
    Compile,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 7] = [
        ExperimentId::Scan2d,
        ExperimentId::Calibrate,
        ExperimentId::Rb,
        ExperimentId::Coherence,
        ExperimentId::Init,
        ExperimentId::Cz,
        ExperimentId::Compile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Scan2d => "scan2d",
            ExperimentId::Calibrate => "calibrate",
            ExperimentId::Rb => "rb",
            ExperimentId::Coherence => "coherence",
            ExperimentId::Init => "init",
            ExperimentId::Cz => "cz",
            ExperimentId::Compile => "compile",
        }
    }

    /// Experiments that draw random numbers regardless of options.
    pub fn is_stochastic(self) -> bool {
        matches!(self, ExperimentId::Rb | ExperimentId::Coherence)
    }

    fn supports_shots(self) -> bool {
        matches!(self, ExperimentId::Rb | ExperimentId::Calibrate)
    }

    fn supports_noiseless(self) -> bool {
        matches!(self, ExperimentId::Rb | ExperimentId::Coherence)
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    /// Bundled spec name or JSON path; each experiment has a default.
    #[serde(default)]
    pub spec: Option<String>,
    /// Overrides merged onto the experiment's default parameters.
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses the rayon default.
    #[serde(default)]
    pub workers: usize,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub shots: Option<u32>,
    #[serde(default)]
    pub noiseless: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            experiment,
            spec: None,
            params: Map::new(),
            seed: None,
            workers: 0,
            out_dir: out_dir.into(),
            shots: None,
            noiseless: false,
        }
    }

    /// Sets `key` (dotted for nested objects) to `value`.
    pub fn set(&mut self, key: &str, value: Value) -> Result<()> {
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(Error::field(key, "empty path segment"));
        }
        let mut map = &mut self.params;
        for p in &parts[..parts.len() - 1] {
            let slot = map.entry(p.to_string()).or_insert_with(|| Value::Object(Map::new()));
            map = slot
                .as_object_mut()
                .ok_or_else(|| Error::field(key, format!("`{p}` is already a scalar")))?;
        }
        map.insert(parts[parts.len() - 1].to_string(), value);
        Ok(())
    }

    /// Parses `key=value`; the value is read as JSON, falling back to a
    /// plain string.
    pub fn set_from_str(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
        self.set(k.trim(), value)
    }

    pub fn validate(&self) -> Result<()> {
        let e = self.experiment;
        if e.is_stochastic() && self.seed.is_none() {
            return Err(Error::field("seed", format!("required for `{e}`")));
        }
        if self.shots.is_some() && !e.supports_shots() {
            return Err(Error::field("shots", format!("not used by `{e}`")));
        }
        if self.shots == Some(0) {
            return Err(Error::field("shots", "must be > 0"));
        }
        if self.shots.is_some() && self.seed.is_none() {
            return Err(Error::field("seed", "required with --shots"));
        }
        if self.noiseless && !e.supports_noiseless() {
            return Err(Error::field("noiseless", format!("not used by `{e}`")));
        }
        Ok(())
    }

    /// SHA-256 over the experiment, resolved device content, parameters,
    /// seed, shots and noise switch. Worker count and output directory do
    /// not change results and are left out.
    pub fn hash(&self, device: &Device) -> Result<String> {
        let canonical = serde_json::json!({
            "experiment": self.experiment,
            "device": device.to_value()?,
            "params": Value::Object(self.params.clone()),
            "seed": self.seed,
            "shots": self.shots,
            "noiseless": self.noiseless,
            "version": env!("CARGO_PKG_VERSION"),
        });
        let bytes = serde_json::to_vec(&canonical).map_err(|e| Error::Numeric(e.to_string()))?;
        Ok(format!("{:x}", Sha256::digest(bytes)))
    }
}

/// Resolved device description.
// Built once per run.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq)]
pub enum Device {
    Single(CqbSpec),
    Pair(TwoCqbSpec),
}

impl Device {
    fn to_value(&self) -> Result<Value> {
        match self {
            Device::Single(s) => serde_json::to_value(s),
            Device::Pair(p) => serde_json::to_value(p),
        }
        .map_err(|e| Error::Numeric(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileRole {
    TraceCsv,
    ReportJson,
}

/// One output file, still in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub role: FileRole,
    pub contents: String,
}

impl Artifact {
    pub fn csv(name: impl Into<String>, contents: String) -> Self {
        Self {
            name: name.into(),
            role: FileRole::TraceCsv,
            contents,
        }
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            role: FileRole::ReportJson,
            contents: crate::format::to_json_string(value)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub path: String,
    pub role: FileRole,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultManifest {
    pub experiment: ExperimentId,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub files: Vec<ManifestFile>,
    /// The only field that varies between identical runs.
    pub wall_clock_s: f64,
}

pub const MANIFEST_NAME: &str = "manifest.json";

fn parse_csv(text: &str) -> std::result::Result<(), String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let cols = header.split(',').count();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(format!("row {} has {} fields, header has {cols}", i + 2, fields.len()));
        }
        if let Some(bad) = fields.iter().find(|f| f.trim().parse::<f64>().is_err()) {
            return Err(format!("row {}: `{bad}` is not a number", i + 2));
        }
    }
    Ok(())
}

impl ResultManifest {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: path.display().to_string(),
            reason: e.to_string(),
        })
    }

    /// Checks that every listed file exists, matches its hash and parses.
    pub fn verify(&self, dir: impl AsRef<Path>) -> Result<()> {
        for f in &self.files {
            let path = dir.as_ref().join(&f.path);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let bad = |reason: String| Error::Parse {
                what: path.display().to_string(),
                reason,
            };
            if format!("{:x}", Sha256::digest(text.as_bytes())) != f.sha256 {
                return Err(bad("content hash mismatch".into()));
            }
            match f.role {
                FileRole::TraceCsv => parse_csv(&text).map_err(bad)?,
                FileRole::ReportJson => {
                    serde_json::from_str::<Value>(&text).map_err(|e| bad(e.to_string()))?;
                }
            }
        }
        Ok(())
    }
}

/// Merges JSON `overrides` onto `defaults`. Keys absent from the defaults
/// are rejected so typos do not pass silently.
pub fn merge_params<T: Serialize + DeserializeOwned>(defaults: &T, overrides: &Map<String, Value>) -> Result<T> {
    fn merge(base: &mut Value, over: &Map<String, Value>, path: &str) -> Result<()> {
        let Value::Object(b) = base else {
            return Err(Error::field(path, "is not an object"));
        };
        for (k, v) in over {
            let full = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            match (b.get_mut(k), v) {
                (None, _) => return Err(Error::field(full, "unknown parameter")),
                (Some(slot @ Value::Object(_)), Value::Object(o)) => merge(slot, o, &full)?,
                (Some(slot), _) => *slot = v.clone(),
            }
        }
        Ok(())
    }
    let mut value = serde_json::to_value(defaults).map_err(|e| Error::Numeric(e.to_string()))?;
    merge(&mut value, overrides, "")?;
    serde_json::from_value(value).map_err(|e| Error::Parse {
        what: "experiment parameters".into(),
        reason: e.to_string(),
    })
}

/// Runs the experiment and writes its outputs and manifest.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultManifest> {
    let start = Instant::now();
    cfg.validate()?;
    let device = commands::resolve_device(cfg)?;
    let config_hash = cfg.hash(&device)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let artifacts = pool.install(|| commands::execute(cfg, &device))?;
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::with_capacity(artifacts.len());
    for a in &artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.contents).map_err(|e| Error::io(&path, e))?;
        files.push(ManifestFile {
            path: a.name.clone(),
            role: a.role,
            sha256: format!("{:x}", Sha256::digest(a.contents.as_bytes())),
        });
    }
    let manifest = ResultManifest {
        experiment: cfg.experiment,
        config_hash,
        seed: cfg.seed,
        files,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    let path = dir.join(MANIFEST_NAME);
    let text = crate::format::to_json_string(&manifest)?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
