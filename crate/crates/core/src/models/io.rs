//! Model directory format: `manifest.json`, `vocab.txt` and one little-endian
//! `f32` row-major file per named tensor.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::models::bundle::{Hyperparams, ModelBundle, Provenance};
use crate::models::network::{Architecture, Network};
use crate::nn::tensor::Tensor;
use crate::text::Vocabulary;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const VOCAB_FILE: &str = "vocab.txt";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub file: String,
    pub shape: Vec<usize>,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub architecture: Architecture,
    pub classes: Vec<String>,
    pub max_len: usize,
    pub vocab_size: usize,
    pub vocab_checksum: String,
    pub hyperparams: Hyperparams,
    pub provenance: Provenance,
    pub tensors: Vec<TensorEntry>,
}

fn tensor_bytes(t: &Tensor<f32>) -> Vec<u8> {
    t.data().iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn save_model(bundle: &ModelBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tensors = Vec::new();
    for p in bundle.network.params() {
        let file = format!("{}.bin", p.name);
        let bytes = tensor_bytes(&p.value);
        let path = dir.join(&file);
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        tensors.push(TensorEntry {
            name: p.name.clone(),
            file,
            shape: p.value.shape().to_vec(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    let vocab_path = dir.join(VOCAB_FILE);
    fs::write(&vocab_path, bundle.vocab.to_text()).map_err(|e| Error::io(&vocab_path, e))?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        architecture: bundle.architecture(),
        classes: bundle.classes.clone(),
        max_len: bundle.max_len,
        vocab_size: bundle.vocab.len(),
        vocab_checksum: bundle.vocab.checksum(),
        hyperparams: bundle.hyper.clone(),
        provenance: bundle.provenance.clone(),
        tensors,
    };
    let path = dir.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<ModelBundle> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Bundle(format!(
            "unsupported format version {}",
            manifest.format_version
        )));
    }

    let expected = manifest.architecture.param_names();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(stem) = name.strip_suffix(".bin") {
            if !expected.contains(&stem) {
                return Err(Error::Bundle(format!(
                    "tensor file `{name}` does not belong to architecture {}",
                    manifest.architecture
                )));
            }
        }
    }

    let mut tensors = BTreeMap::new();
    for entry in &manifest.tensors {
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let len: usize = entry.shape.iter().product();
        if bytes.len() != len * 4 {
            return Err(Error::Bundle(format!(
                "tensor `{}`: expected {} bytes, found {} (truncated or corrupt)",
                entry.name,
                len * 4,
                bytes.len()
            )));
        }
        if hex::encode(Sha256::digest(&bytes)) != entry.sha256 {
            return Err(Error::Bundle(format!("tensor `{}`: checksum mismatch", entry.name)));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if tensors
            .insert(entry.name.clone(), Tensor::from_vec(&entry.shape, data)?)
            .is_some()
        {
            return Err(Error::Bundle(format!("tensor `{}` listed twice", entry.name)));
        }
    }
    let network = Network::from_tensors(manifest.architecture, tensors, manifest.hyperparams.geometry)?;

    let vpath = dir.join(VOCAB_FILE);
    let vocab = Vocabulary::from_text(&fs::read_to_string(&vpath).map_err(|e| Error::io(&vpath, e))?)?;
    if vocab.checksum() != manifest.vocab_checksum || vocab.len() != manifest.vocab_size {
        return Err(Error::Bundle("vocabulary checksum mismatch".into()));
    }
    if network.embedding.vocab_size() != vocab.len() {
        return Err(Error::Bundle("embedding rows differ from vocabulary size".into()));
    }
    if network.classes() != manifest.classes.len() {
        return Err(Error::Bundle("dense output width differs from class count".into()));
    }
    Ok(ModelBundle {
        network,
        vocab,
        classes: manifest.classes,
        max_len: manifest.max_len,
        hyper: manifest.hyperparams,
        provenance: manifest.provenance,
    })
}
