//! Model checkpoints.
//!
//! Layout: the 8-byte magic `OIECKPT1`, a little-endian `u64` header length,
//! a JSON header, then every tensor as little-endian `f64` in the order the
//! header lists them.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embedding::Vocabulary;
use super::network::NetworkParams;
use super::ModelConfig;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"OIECKPT1";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    config: ModelConfig,
    classes: Vec<String>,
    vocabularies: [Vocabulary; 4],
    tensors: Vec<TensorInfo>,
}

pub fn write_checkpoint<W: Write>(params: &NetworkParams, mut writer: W) -> Result<()> {
    let header = Header {
        version: CHECKPOINT_VERSION,
        config: params.config.clone(),
        classes: params.classes.clone(),
        vocabularies: std::array::from_fn(|f| params.embeddings.tables[f].vocab.clone()),
        tensors: params
            .tensor_names()
            .into_iter()
            .zip(params.tensor_shapes())
            .map(|(name, shape)| TensorInfo { name, shape })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    writer.write_all(MAGIC)?;
    writer.write_all(&(json.len() as u64).to_le_bytes())?;
    writer.write_all(&json)?;
    for tensor in params.tensors() {
        for v in tensor {
            writer.write_all(&v.to_le_bytes())?;
        }
    }
    writer.flush()?;
    Ok(())
}

fn corrupt(message: impl Into<String>) -> Error {
    Error::Config(format!("invalid checkpoint: {}", message.into()))
}

pub fn read_checkpoint<R: Read>(mut reader: R) -> Result<NetworkParams> {
    let mut magic = [0u8; 8];
    reader.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut len = [0u8; 8];
    reader.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    let mut json = vec![0u8; len];
    reader.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    if header.version != CHECKPOINT_VERSION {
        return Err(corrupt(format!("unsupported version {}", header.version)));
    }

    let mut params = NetworkParams::zeros(header.config, header.classes, header.vocabularies)?;
    let names = params.tensor_names();
    let shapes = params.tensor_shapes();
    if names.len() != header.tensors.len() {
        return Err(corrupt(format!(
            "expected {} tensors, header lists {}",
            names.len(),
            header.tensors.len()
        )));
    }
    for ((info, name), shape) in header.tensors.iter().zip(&names).zip(&shapes) {
        if &info.name != name || &info.shape != shape {
            return Err(corrupt(format!(
                "tensor {} {:?} does not match expected {} {:?}",
                info.name, info.shape, name, shape
            )));
        }
    }
    let mut buf = [0u8; 8];
    for tensor in params.tensors_mut() {
        for v in tensor.iter_mut() {
            reader.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
    }
    if reader.read(&mut buf)? != 0 {
        return Err(corrupt("trailing bytes"));
    }
    Ok(params)
}

pub fn save_checkpoint(params: &NetworkParams, path: &Path) -> Result<()> {
    write_checkpoint(params, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkParams> {
    read_checkpoint(BufReader::new(File::open(path)?))
}
