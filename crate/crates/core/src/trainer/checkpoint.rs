//! Binary model checkpoints.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size            | field                                   |
//! |--------|-----------------|-----------------------------------------|
//! | 0      | 8               | magic `CGMODEL\0`                       |
//! | 8      | 4               | format version, `u32` (currently 1)     |
//! | 12     | 8               | `hash_dim`, `u64`                       |
//! | 20     | 24 * hash_dim   | weights, `f64`, row-major label x dim   |
//! | ...    | 24              | bias, three `f64`                       |
//!
//! Floats are stored as raw IEEE-754 bits, so a load reproduces the saved
//! parameters exactly.

use std::io::{Read, Write};
use std::path::Path;

use super::ModelParams;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"CGMODEL\0";
pub const VERSION: u32 = 1;

pub fn write_checkpoint<W: Write>(model: &ModelParams, mut out: W) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(model.hash_dim as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * (model.weights.len() + 3));
    for w in model.weights.iter().chain(model.bias.iter()) {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<ModelParams> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < 20 || &bytes[..8] != MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let hash_dim = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if hash_dim < 2 || !hash_dim.is_power_of_two() || hash_dim > 1 << 31 {
        return Err(Error::Checkpoint(format!("invalid hash_dim {hash_dim}")));
    }
    let hash_dim = hash_dim as usize;
    let expected = 20 + 8 * (3 * hash_dim + 3);
    if bytes.len() != expected {
        return Err(Error::Checkpoint(format!(
            "expected {expected} bytes for hash_dim {hash_dim}, found {}",
            bytes.len()
        )));
    }
    let mut floats = bytes[20..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let weights: Vec<f64> = floats.by_ref().take(3 * hash_dim).collect();
    let bias = [floats.next().unwrap(), floats.next().unwrap(), floats.next().unwrap()];
    let model = ModelParams { hash_dim, weights, bias };
    if !model.is_finite() {
        return Err(Error::Checkpoint("non-finite parameter".into()));
    }
    Ok(model)
}

pub fn save(model: &ModelParams, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<ModelParams> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(std::io::BufReader::new(file))
}
