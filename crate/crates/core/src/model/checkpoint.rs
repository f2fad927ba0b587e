//! Binary checkpoints: magic `PACR`, `u32` version, `u64` spec hash,
//! `u32` tensor count, then named tensor records.

use super::{ModelError, ModelParams, NetworkSpec};
use crate::nn::records::{read_records, read_u32, read_u64, write_records};
use std::io::{Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PACR";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(w: &mut W, params: &ModelParams) -> Result<(), ModelError> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&params.spec.hash().to_le_bytes())?;
    w.write_all(&(params.tensors.len() as u32).to_le_bytes())?;
    let named: Vec<(&str, &crate::nn::Tensor)> = params.tensors.iter().map(|(n, t)| (n.as_str(), t)).collect();
    write_records(w, &named)?;
    Ok(())
}

/// Reads a checkpoint written for `spec`.
pub fn read_checkpoint<R: Read>(r: &mut R, spec: &NetworkSpec) -> Result<ModelParams, ModelError> {
    let bad = |m: String| ModelError::Checkpoint(m);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let hash = read_u64(r)?;
    if hash != spec.hash() {
        return Err(bad(format!(
            "spec hash {hash:016x} does not match network {:016x}",
            spec.hash()
        )));
    }
    let count = read_u32(r)? as usize;
    if count != spec.param_shapes().len() {
        return Err(bad(format!("{count} tensors, network has {}", spec.param_shapes().len())));
    }
    let tensors = read_records(r, count)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(bad("trailing bytes".into()));
    }
    let params = ModelParams {
        spec: spec.clone(),
        tensors,
    };
    params.validate()?;
    Ok(params)
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<(), ModelError> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, params)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path, spec: &NetworkSpec) -> Result<ModelParams, ModelError> {
    let bytes = std::fs::read(path)?;
    read_checkpoint(&mut bytes.as_slice(), spec)
}
