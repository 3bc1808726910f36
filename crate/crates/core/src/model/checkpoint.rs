//! Checkpoint files: a JSON manifest next to a little-endian `f64` blob.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamStore;
use crate::tensor::Tensor;

use super::{ModelConfig, Producer, Student, Teacher};

pub const CHECKPOINT_FORMAT: &str = "falqon-surrogate-checkpoint/1";

/// Location of one tensor inside the blob.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: [usize; 2],
    /// Byte offset into the blob.
    pub offset: usize,
    pub dtype: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: String,
    pub producer: Producer,
    pub config: ModelConfig,
    pub parameter_count: usize,
    /// Blob file name, relative to the manifest.
    pub blob: String,
    pub tensors: Vec<TensorEntry>,
    /// Free-form provenance (training settings, loss choices, epoch).
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

fn blob_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("bin")
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `path` (manifest) and `path` with a `.bin` extension (blob).
pub fn save_checkpoint(
    path: &Path,
    producer: Producer,
    config: &ModelConfig,
    store: &ParamStore,
    metadata: BTreeMap<String, serde_json::Value>,
) -> Result<()> {
    store.check_finite()?;
    let mut blob = Vec::with_capacity(store.num_scalars() * 8);
    let mut tensors = Vec::with_capacity(store.len());
    for (name, t) in store.iter() {
        tensors.push(TensorEntry {
            name: name.to_string(),
            shape: [t.rows(), t.cols()],
            offset: blob.len(),
            dtype: "float64".to_string(),
        });
        for x in t.data() {
            blob.extend_from_slice(&x.to_le_bytes());
        }
    }
    let blob_file = blob_path(path);
    let manifest = CheckpointManifest {
        format_version: CHECKPOINT_FORMAT.to_string(),
        producer,
        config: config.clone(),
        parameter_count: store.num_scalars(),
        blob: blob_file.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string(),
        tensors,
        metadata,
    };
    write_atomic(&blob_file, &blob)?;
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Reads a manifest and its blob.
pub fn load_checkpoint(path: &Path) -> Result<(CheckpointManifest, ParamStore)> {
    let manifest: CheckpointManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
    if manifest.format_version != CHECKPOINT_FORMAT {
        return Err(Error::parse(format!("unsupported checkpoint format {:?}", manifest.format_version)));
    }
    let blob = fs::read(path.with_file_name(&manifest.blob))?;
    let mut store = ParamStore::new();
    for entry in &manifest.tensors {
        if entry.dtype != "float64" {
            return Err(Error::parse(format!("tensor {} has dtype {}", entry.name, entry.dtype)));
        }
        let len = entry.shape[0] * entry.shape[1];
        let bytes = blob
            .get(entry.offset..entry.offset + 8 * len)
            .ok_or_else(|| Error::parse(format!("tensor {} extends past the blob", entry.name)))?;
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
        store.insert(entry.name.clone(), Tensor::from_vec(entry.shape[0], entry.shape[1], data)?);
    }
    store.check_finite()?;
    Ok((manifest, store))
}

fn expect_producer(manifest: &CheckpointManifest, want: Producer) -> Result<()> {
    if manifest.producer != want {
        return Err(Error::invalid(format!("checkpoint holds a {:?} model, expected {want:?}", manifest.producer)));
    }
    Ok(())
}

impl Teacher {
    pub fn save(&self, store: &ParamStore, path: &Path, metadata: BTreeMap<String, serde_json::Value>) -> Result<()> {
        save_checkpoint(path, Producer::Teacher, self.config(), store, metadata)
    }

    pub fn load(path: &Path) -> Result<(Self, ParamStore, CheckpointManifest)> {
        let (manifest, loaded) = load_checkpoint(path)?;
        expect_producer(&manifest, Producer::Teacher)?;
        let (model, mut store) = Teacher::new(manifest.config.clone(), 0)?;
        store.copy_from(&loaded)?;
        Ok((model, store, manifest))
    }
}

impl Student {
    pub fn save(&self, store: &ParamStore, path: &Path, metadata: BTreeMap<String, serde_json::Value>) -> Result<()> {
        save_checkpoint(path, Producer::Student, self.config(), store, metadata)
    }

    pub fn load(path: &Path) -> Result<(Self, ParamStore, CheckpointManifest)> {
        let (manifest, loaded) = load_checkpoint(path)?;
        expect_producer(&manifest, Producer::Student)?;
        let (model, mut store) = Student::new(manifest.config.clone(), 0)?;
        store.copy_from(&loaded)?;
        Ok((model, store, manifest))
    }
}
