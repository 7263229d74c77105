//! Binary checkpoint format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "DWB1" | version u32 | config_hash u64 | env_steps u64
//! | decay_steps u64 | network_count u8 | network*
//!
//! network := layer_count u32 | dims u32 × layer_count
//!          | hidden_activation u8 | output_activation u8
//!          | per weight layer: weights row-major f32, then biases f32
//! ```
//!
//! Parameters are stored as `f32`; loading widens back to `f64`, so a
//! round trip is lossy at single precision. The config hash ties a
//! checkpoint to the configuration that produced it.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::nn::{Activation, MlpNetwork};

pub const MAGIC: &[u8; 4] = b"DWB1";
pub const FORMAT_VERSION: u32 = 1;

/// Largest layer width accepted when loading, to reject garbage files
/// before attempting a huge allocation.
const MAX_DIM: u32 = 1 << 20;

/// Everything stored in a checkpoint besides the networks themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckpointMeta {
    /// FNV-1a hash of the canonical configuration text.
    pub config_hash: u64,
    /// Environment steps taken when the checkpoint was written.
    pub env_steps: u64,
    /// Exploration-schedule decay steps consumed (fixes the value of the
    /// exploration probability).
    pub decay_steps: u64,
}

#[derive(Debug)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub networks: Vec<MlpNetwork>,
}

/// 64-bit FNV-1a, used to fingerprint configuration text.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

pub fn write_checkpoint(
    path: &Path,
    meta: &CheckpointMeta,
    networks: &[&MlpNetwork],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&meta.config_hash.to_le_bytes())?;
    w.write_all(&meta.env_steps.to_le_bytes())?;
    w.write_all(&meta.decay_steps.to_le_bytes())?;
    w.write_all(&[networks.len() as u8])?;
    for net in networks {
        write_network(&mut w, net)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let mut r = BufReader::new(File::open(path)?);
    let bad = |reason: &str| Error::BadFile { path: PathBuf::from(path), reason: reason.into() };
    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic).map_err(|_| bad("too short for magic"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic; not a checkpoint file"));
    }
    let version = read_u32(&mut r).map_err(|_| bad("truncated version"))?;
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let config_hash = read_u64(&mut r).map_err(|_| bad("truncated header"))?;
    let env_steps = read_u64(&mut r).map_err(|_| bad("truncated header"))?;
    let decay_steps = read_u64(&mut r).map_err(|_| bad("truncated header"))?;
    let mut count = [0u8; 1];
    read_exact(&mut r, &mut count).map_err(|_| bad("truncated header"))?;
    let mut networks = Vec::with_capacity(count[0] as usize);
    for i in 0..count[0] {
        networks.push(
            read_network(&mut r)
                .map_err(|e| bad(&format!("network {i}: {e}")))?,
        );
    }
    Ok(Checkpoint { meta: CheckpointMeta { config_hash, env_steps, decay_steps }, networks })
}

pub fn write_network<W: Write>(w: &mut W, net: &MlpNetwork) -> Result<()> {
    let dims = net.layer_dims();
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&[net.hidden_activation().code(), net.output_activation().code()])?;
    for l in 0..dims.len() - 1 {
        for &v in net.weights()[l].iter() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
        for &v in net.biases()[l].iter() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_network<R: Read>(r: &mut R) -> std::result::Result<MlpNetwork, String> {
    let n_dims = read_u32(r).map_err(|_| "truncated layer count".to_string())?;
    if !(2..=64).contains(&n_dims) {
        return Err(format!("implausible layer count {n_dims}"));
    }
    let mut dims = Vec::with_capacity(n_dims as usize);
    for _ in 0..n_dims {
        let d = read_u32(r).map_err(|_| "truncated dims".to_string())?;
        if d == 0 || d > MAX_DIM {
            return Err(format!("implausible layer width {d}"));
        }
        dims.push(d as usize);
    }
    let mut acts = [0u8; 2];
    read_exact(r, &mut acts).map_err(|_| "truncated activation codes".to_string())?;
    let hidden = Activation::from_code(acts[0]).ok_or(format!("bad activation code {}", acts[0]))?;
    let output = Activation::from_code(acts[1]).ok_or(format!("bad activation code {}", acts[1]))?;
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..dims.len() - 1 {
        let (rows, cols) = (dims[l + 1], dims[l]);
        let mut w = Array2::zeros((rows, cols));
        for v in w.iter_mut() {
            *v = read_f32(r).map_err(|_| "truncated weights".to_string())? as f64;
        }
        let mut b = Array1::zeros(rows);
        for v in b.iter_mut() {
            *v = read_f32(r).map_err(|_| "truncated biases".to_string())? as f64;
        }
        weights.push(w);
        biases.push(b);
    }
    Ok(MlpNetwork::from_parts(dims, weights, biases, hidden, output))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> std::io::Result<()> {
    r.read_exact(buf)
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f32<R: Read>(r: &mut R) -> std::io::Result<f32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(f32::from_le_bytes(b))
}
