//! Checkpoint directory format: model.json (specs, layout manifest, history)
//! plus weights.bin (named-tensor blob, little-endian f64, offsets per the
//! manifest). Reloading reproduces forecasts bit-exactly.

use super::{EpochStats, ModelSpec, ModelState};
use crate::diffcore::{ParameterStore, Tensor};
use crate::error::{Error, Result};
use crate::sysgen::Scaler;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Result of one training run: the best-validation model state plus history.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelCheckpoint {
    pub model: ModelState,
    pub seed_index: usize,
    pub history: Vec<EpochStats>,
    pub best_val: f64,
    pub failed: bool,
    pub config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Serialize, Deserialize)]
struct CheckpointManifest {
    format_version: u32,
    spec: ModelSpec,
    scaler: Scaler,
    param_norm: [f64; 2],
    tensors: Vec<TensorMeta>,
    seed_index: usize,
    best_val: f64,
    failed: bool,
    config_hash: String,
    history: Vec<EpochStats>,
}

pub fn save_checkpoint(ckpt: &ModelCheckpoint, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tensors = Vec::new();
    let mut offset = 0usize;
    for (name, t) in ckpt.model.params.iter() {
        tensors.push(TensorMeta { name: name.to_string(), shape: t.shape().to_vec(), offset });
        offset += t.len();
    }
    let manifest = CheckpointManifest {
        format_version: CHECKPOINT_VERSION,
        spec: ckpt.model.spec.clone(),
        scaler: ckpt.model.scaler.clone(),
        param_norm: ckpt.model.param_norm,
        tensors,
        seed_index: ckpt.seed_index,
        best_val: ckpt.best_val,
        failed: ckpt.failed,
        config_hash: ckpt.config_hash.clone(),
        history: ckpt.history.clone(),
    };
    let jpath = dir.join("model.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Json { path: jpath.display().to_string(), source: e })?;
    std::fs::write(&jpath, json).map_err(|e| Error::io(&jpath, e))?;

    let bpath = dir.join("weights.bin");
    let flat = ckpt.model.params.flatten();
    let mut buf = Vec::with_capacity(flat.len() * 8);
    for v in &flat {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = std::fs::File::create(&bpath).map_err(|e| Error::io(&bpath, e))?;
    f.write_all(&buf).map_err(|e| Error::io(&bpath, e))?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path) -> Result<ModelCheckpoint> {
    let jpath = dir.join("model.json");
    let text = std::fs::read_to_string(&jpath).map_err(|e| Error::io(&jpath, e))?;
    let manifest: CheckpointManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Json { path: jpath.display().to_string(), source: e })?;
    if manifest.format_version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {}",
            manifest.format_version
        )));
    }

    let bpath = dir.join("weights.bin");
    let mut raw = Vec::new();
    std::fs::File::open(&bpath)
        .map_err(|e| Error::io(&bpath, e))?
        .read_to_end(&mut raw)
        .map_err(|e| Error::io(&bpath, e))?;
    let total: usize = manifest.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
    if raw.len() != total * 8 {
        return Err(Error::Format(format!(
            "weights.bin holds {} bytes, manifest declares {}",
            raw.len(),
            total * 8
        )));
    }
    let mut params = ParameterStore::new();
    for meta in &manifest.tensors {
        let len: usize = meta.shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for i in 0..len {
            let at = (meta.offset + i) * 8;
            data.push(f64::from_le_bytes(raw[at..at + 8].try_into().unwrap()));
        }
        params.insert(&meta.name, Tensor::from_vec(&meta.shape, data));
    }

    Ok(ModelCheckpoint {
        model: ModelState {
            spec: manifest.spec,
            params,
            scaler: manifest.scaler,
            param_norm: manifest.param_norm,
        },
        seed_index: manifest.seed_index,
        history: manifest.history,
        best_val: manifest.best_val,
        failed: manifest.failed,
        config_hash: manifest.config_hash,
    })
}
