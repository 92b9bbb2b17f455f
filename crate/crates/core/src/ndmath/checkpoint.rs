//! Checkpoint directories: `manifest.json` plus `params.bin`.
//!
//! `params.bin` holds little-endian `f32` values of every parameter,
//! concatenated in manifest order. Entry `offset` and `length` count floats,
//! not bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::ParamStore;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::fsutil;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARAMS_FILE: &str = "params.bin";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub model_kind: String,
    pub hyperparameters: serde_json::Value,
    pub vocab: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

pub fn save(
    dir: &Path,
    model_kind: &str,
    hyperparameters: serde_json::Value,
    vocab: Vec<String>,
    params: &ParamStore<f32>,
) -> Result<()> {
    let mut entries = Vec::with_capacity(params.len());
    let mut bin = Vec::with_capacity(params.num_scalars() * 4);
    let mut offset = 0;
    for (name, p) in params.iter() {
        let length = p.value.len();
        entries.push(ManifestEntry {
            name: name.to_owned(),
            shape: p.value.shape().to_vec(),
            offset,
            length,
        });
        for x in p.value.data() {
            bin.extend_from_slice(&x.to_le_bytes());
        }
        offset += length;
    }
    let manifest = CheckpointManifest {
        format_version: FORMAT_VERSION,
        model_kind: model_kind.to_owned(),
        hyperparameters,
        vocab,
        entries,
    };
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::json(dir, e))?;
    json.push(b'\n');
    fsutil::atomic_write_dir(dir, &[(MANIFEST_FILE, &json), (PARAMS_FILE, &bin)])
}

pub fn load(dir: &Path) -> Result<(CheckpointManifest, ParamStore<f32>)> {
    let mpath = dir.join(MANIFEST_FILE);
    let text = fsutil::read_to_string(&mpath)?;
    let manifest: CheckpointManifest =
        serde_json::from_str(&text).map_err(|e| Error::json(&mpath, e))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported format_version {}",
            manifest.format_version
        )));
    }
    let bpath = dir.join(PARAMS_FILE);
    let bytes = fs::read(&bpath).map_err(|e| Error::io(&bpath, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Checkpoint("params.bin length not a multiple of 4".into()));
    }
    let floats: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let mut params = ParamStore::new();
    for e in &manifest.entries {
        let shape: [usize; 2] = e
            .shape
            .as_slice()
            .try_into()
            .map_err(|_| Error::Checkpoint(format!("entry `{}` is not rank 2", e.name)))?;
        if shape[0] * shape[1] != e.length || e.offset + e.length > floats.len() {
            return Err(Error::Checkpoint(format!("entry `{}` out of bounds", e.name)));
        }
        let data = floats[e.offset..e.offset + e.length].to_vec();
        params.insert(e.name.clone(), Tensor::new(shape, data)?)?;
    }
    Ok((manifest, params))
}
