//! Binary container of named f64 tensors.
//!
//! Layout: the 8-byte magic `AMNCKPT\0`, the manifest length as a
//! little-endian u64, the json manifest, then every tensor's data as
//! little-endian f64 in manifest order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Matrix, ParamStore, TensorError};

pub const MAGIC: &[u8; 8] = b"AMNCKPT\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub tensors: Vec<TensorEntry>,
    /// Free-form metadata, e.g. the model configuration.
    #[serde(default)]
    pub meta: serde_json::Value,
}

pub fn write(store: &ParamStore, meta: &serde_json::Value, mut w: impl Write) -> Result<(), TensorError> {
    let manifest = Manifest {
        version: FORMAT_VERSION,
        tensors: store
            .iter()
            .map(|(_, p)| TensorEntry { name: p.name.clone(), shape: [p.value.rows, p.value.cols] })
            .collect(),
        meta: meta.clone(),
    };
    let json = serde_json::to_vec(&manifest)?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(store.element_count() * 8);
    for (_, p) in store.iter() {
        for x in &p.value.data {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read(mut r: impl Read) -> Result<(ParamStore, Manifest), TensorError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(TensorError::Checkpoint("bad magic".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 30 {
        return Err(TensorError::Checkpoint(format!("manifest length {len} is implausible")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json)?;
    let manifest: Manifest = serde_json::from_slice(&json)?;
    if manifest.version != FORMAT_VERSION {
        return Err(TensorError::Checkpoint(format!("unsupported version {}", manifest.version)));
    }
    let mut store = ParamStore::new();
    for t in &manifest.tensors {
        if store.id(&t.name).is_some() {
            return Err(TensorError::Checkpoint(format!("duplicate tensor `{}`", t.name)));
        }
        let [rows, cols] = t.shape;
        let mut bytes = vec![0u8; rows * cols * 8];
        r.read_exact(&mut bytes)?;
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        store.add(&t.name, Matrix::from_vec(rows, cols, data));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(TensorError::Checkpoint("trailing bytes after payload".into()));
    }
    Ok((store, manifest))
}

pub fn save(store: &ParamStore, meta: &serde_json::Value, path: &Path) -> Result<(), TensorError> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write(store, meta, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(ParamStore, Manifest), TensorError> {
    read(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Copies values from `src` into `dst`; both must hold the same names and shapes.
pub fn restore_into(dst: &mut ParamStore, src: &ParamStore) -> Result<(), TensorError> {
    if dst.len() != src.len() {
        return Err(TensorError::Checkpoint(format!("expected {} tensors, found {}", dst.len(), src.len())));
    }
    for p in dst.iter_mut() {
        let id = src
            .id(&p.name)
            .ok_or_else(|| TensorError::Checkpoint(format!("missing tensor `{}`", p.name)))?;
        let v = src.value(id);
        if v.shape() != p.value.shape() {
            return Err(TensorError::Checkpoint(format!(
                "`{}` has shape {:?}, expected {:?}",
                p.name,
                v.shape(),
                p.value.shape()
            )));
        }
        p.value = v.clone();
    }
    Ok(())
}
