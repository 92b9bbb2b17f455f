use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::advgen::GenConfig;
use crate::error::{Error, Result};
use crate::fsutil;
use crate::inference::InferenceConfig;
use crate::models::{ActorHyper, CriticHyper};
use crate::ndmath::checkpoint::{MANIFEST_FILE, PARAMS_FILE};
use crate::training::TrainConfig;

/// Every tunable of every subcommand. Missing fields take their defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub gen: GenConfig,
    pub actor: ActorHyper,
    pub critic: CriticHyper,
    pub train: TrainConfig,
    pub infer: InferenceConfig,
    pub workers: usize,
}

impl AppConfig {
    pub fn from_json(text: &str, source: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", source.display())))
    }

    /// Defaults, then the config file if any, then `flags`.
    pub fn resolve(file: Option<&Path>, flags: impl FnOnce(&mut AppConfig)) -> Result<Self> {
        let mut cfg = match file {
            Some(p) => Self::from_json(&fsutil::read_to_string(p)?, p)?,
            None => Self::default(),
        };
        flags(&mut cfg);
        cfg.gen.validate()?;
        cfg.train.validate()?;
        cfg.infer.validate()?;
        Ok(cfg)
    }
}

/// Provenance written next to each artifact as `<artifact>.run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: AppConfig,
    pub seed: u64,
    /// SHA-256 of each input, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    pub tool_version: String,
    pub duration_secs: f64,
}

pub fn manifest_path(artifact: &Path) -> std::path::PathBuf {
    let mut name = artifact.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".run.json");
    artifact.with_file_name(name)
}

/// Digest of a file, or of a checkpoint directory's two files in order.
pub fn digest_input(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    if path.is_dir() {
        for f in [MANIFEST_FILE, PARAMS_FILE] {
            let p = path.join(f);
            h.update(std::fs::read(&p).map_err(|e| Error::io(&p, e))?);
        }
    } else {
        h.update(std::fs::read(path).map_err(|e| Error::io(path, e))?);
    }
    Ok(hex::encode(h.finalize()))
}

impl RunManifest {
    pub fn write(&self, artifact: &Path) -> Result<()> {
        let mut json = serde_json::to_vec_pretty(self).expect("manifest serializes");
        json.push(b'\n');
        fsutil::atomic_write(&manifest_path(artifact), &json)
    }
}
