//! Weight-file serialization.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic   4 bytes  "HRVW"
//! version u8       currently 1
//! stats   8 f64    ch_mean[3], ch_std[3], target_mean, target_std
//! count   u16      number of tensors
//! tensor  repeated: name_len u16, name utf-8,
//!                   ndim u8, dims u32 each,
//!                   data f64 * product(dims)
//! ```
//!
//! Loading rejects anything that is not exactly one architecture's worth
//! of tensors, so a loaded file is always usable as-is.

use super::features::{ModelError, NormStats, CHANNELS};
use super::net::{ModelWeights, Tensor};

const MAGIC: &[u8; 4] = b"HRVW";
const VERSION: u8 = 1;
/// Upper bound on a single tensor's element count; anything bigger is a
/// corrupt or hostile file, not a model.
const MAX_TENSOR_LEN: u64 = 1 << 24;
const MAX_NDIM: usize = 8;
const MAX_NAME_LEN: usize = 256;

/// Serialize weights to the versioned byte format.
pub fn save_weights(w: &ModelWeights) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + w.param_count() * 8);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    for v in w.stats.ch_mean.iter().chain(w.stats.ch_std.iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&w.stats.target_mean.to_le_bytes());
    out.extend_from_slice(&w.stats.target_std.to_le_bytes());
    out.extend_from_slice(&(w.tensors.len() as u16).to_le_bytes());
    for t in &w.tensors {
        out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        out.push(t.shape.len() as u8);
        for d in &t.shape {
            out.extend_from_slice(&(*d as u32).to_le_bytes());
        }
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).ok_or_else(|| truncated(what))?;
        if end > self.bytes.len() {
            return Err(truncated(what));
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self, what: &str) -> Result<u8, ModelError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, ModelError> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32, ModelError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self, what: &str) -> Result<f64, ModelError> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

fn truncated(what: &str) -> ModelError {
    ModelError::CorruptFile(format!("truncated at {what}"))
}

/// Parse a weight file. Corruption (bad magic, truncation, nonsense
/// sizes, trailing bytes) is [`ModelError::CorruptFile`]; a well-formed
/// file of another version is [`ModelError::VersionMismatch`]; tensors
/// that do not match the architecture are [`ModelError::ShapeMismatch`].
pub fn load_weights(bytes: &[u8]) -> Result<ModelWeights, ModelError> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4, "magic")? != MAGIC {
        return Err(ModelError::CorruptFile("bad magic".to_string()));
    }
    let version = c.u8("version")?;
    if version != VERSION {
        return Err(ModelError::VersionMismatch { expected: VERSION, got: version });
    }
    let mut stats = NormStats::identity();
    for i in 0..CHANNELS {
        stats.ch_mean[i] = c.f64("channel means")?;
    }
    for i in 0..CHANNELS {
        stats.ch_std[i] = c.f64("channel stds")?;
    }
    stats.target_mean = c.f64("target mean")?;
    stats.target_std = c.f64("target std")?;

    let count = c.u16("tensor count")? as usize;
    let mut tensors = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let name_len = c.u16("name length")? as usize;
        if name_len > MAX_NAME_LEN {
            return Err(ModelError::CorruptFile(format!("name length {name_len} too large")));
        }
        let name = std::str::from_utf8(c.take(name_len, "name")?)
            .map_err(|_| ModelError::CorruptFile("name is not utf-8".to_string()))?
            .to_string();
        let ndim = c.u8("ndim")? as usize;
        if ndim == 0 || ndim > MAX_NDIM {
            return Err(ModelError::CorruptFile(format!("ndim {ndim} out of range")));
        }
        let mut shape = Vec::with_capacity(ndim);
        let mut len: u64 = 1;
        for _ in 0..ndim {
            let d = c.u32("dimension")? as u64;
            len = len.saturating_mul(d);
            shape.push(d as usize);
        }
        if len == 0 || len > MAX_TENSOR_LEN {
            return Err(ModelError::CorruptFile(format!("tensor length {len} out of range")));
        }
        // Verify the bytes exist before allocating for them.
        let byte_len = (len as usize) * 8;
        let data_bytes = c.take(byte_len, "tensor data")?;
        let data = data_bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        tensors.push(Tensor { name, shape, data });
    }
    if c.pos != bytes.len() {
        return Err(ModelError::CorruptFile(format!(
            "{} trailing bytes",
            bytes.len() - c.pos
        )));
    }
    let weights = ModelWeights { tensors, stats };
    weights.validate()?;
    Ok(weights)
}
