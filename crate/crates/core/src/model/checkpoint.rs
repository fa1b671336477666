//! Checkpoint archive layout (all integers little-endian):
//!
//! ```text
//! offset 0   8 bytes   magic "LLCKPT01"
//! offset 8   u64       manifest length M
//! offset 16  M bytes   manifest, UTF-8 JSON (CheckpointManifest)
//! ...        payload   every tensor of manifest.tensors in order, row-major f64
//! ```
//!
//! `content_hash` is [`ModelSnapshot::checksum`] of the stored parameters and
//! is re-verified on load.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Backbone, BackboneSpec, ModelSnapshot};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"LLCKPT01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub backbone_spec: BackboneSpec,
    pub step_index: usize,
    pub frozen: bool,
    pub content_hash: String,
    pub parent_hash: Option<String>,
    pub tensors: Vec<TensorEntry>,
}

pub fn write_checkpoint<W: Write>(snapshot: &ModelSnapshot, mut out: W) -> Result<()> {
    let named = snapshot.backbone().named_tensors();
    let manifest = CheckpointManifest {
        format_version: 1,
        backbone_spec: snapshot.spec().clone(),
        step_index: snapshot.step_index(),
        frozen: snapshot.is_frozen(),
        content_hash: snapshot.checksum(),
        parent_hash: snapshot.parent_hash().map(str::to_owned),
        tensors: named
            .iter()
            .map(|(name, shape, _)| TensorEntry {
                name: name.clone(),
                shape: shape.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&manifest)?;
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    let mut payload = Vec::with_capacity(8 * snapshot.backbone().parameter_count());
    for (_, _, values) in &named {
        for v in *values {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.write_all(&payload)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R, origin: &Path) -> Result<(CheckpointManifest, ModelSnapshot)> {
    let fail = |reason: String| Error::Checkpoint {
        path: origin.to_path_buf(),
        reason,
    };
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(fail("bad magic".into()));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    input.read_exact(&mut json)?;
    let manifest: CheckpointManifest =
        serde_json::from_slice(&json).map_err(|e| fail(format!("manifest: {e}")))?;
    if manifest.format_version != 1 {
        return Err(fail(format!("unsupported format {}", manifest.format_version)));
    }
    let mut tensors = Vec::with_capacity(manifest.tensors.len());
    let mut buf = [0u8; 8];
    for entry in &manifest.tensors {
        let n: usize = entry.shape.iter().product();
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            input
                .read_exact(&mut buf)
                .map_err(|_| fail(format!("truncated payload in {}", entry.name)))?;
            values.push(f64::from_le_bytes(buf));
        }
        tensors.push((entry.name.clone(), entry.shape.clone(), values));
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(fail(format!("{} trailing bytes", rest.len())));
    }
    let backbone = Backbone::from_tensors(&manifest.backbone_spec, &tensors)
        .map_err(|e| fail(e.to_string()))?;
    let snapshot = ModelSnapshot::from_parts(
        backbone,
        manifest.step_index,
        manifest.frozen,
        manifest.parent_hash.clone(),
    );
    let actual = snapshot.checksum();
    if actual != manifest.content_hash {
        return Err(fail(format!(
            "content hash mismatch: manifest {} vs payload {actual}",
            manifest.content_hash
        )));
    }
    Ok((manifest, snapshot))
}

pub fn save_checkpoint(snapshot: &ModelSnapshot, path: &Path) -> Result<()> {
    let mut bytes = Vec::new();
    write_checkpoint(snapshot, &mut bytes)?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, &bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<ModelSnapshot> {
    let file = fs::File::open(path).map_err(|e| Error::Checkpoint {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    read_checkpoint(std::io::BufReader::new(file), path).map(|(_, s)| s)
}
