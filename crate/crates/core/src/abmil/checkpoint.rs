//! `ABML` checkpoint files.
//!
//! Layout, little-endian throughout:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4 | magic `ABML` |
//! | 2 | format version (`1`) |
//! | 16 | `dim`, `m1`, `m2`, `K` as `u32` |
//! | 8·P | parameters as `f64`, tensors in the order `W1 b1 V bv w W2 b2` |
//! | 4 | length of the trailing config section in bytes |
//! | … | the training config as UTF-8 `key=value` lines |

use std::path::Path;

use super::{AbmilError, AbmilParams, ModelShape, TrainConfig};
use crate::NUM_CLASSES;

pub const MAGIC: &[u8; 4] = b"ABML";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: AbmilParams,
    pub config: TrainConfig,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let shape = self.params.shape();
        let config = self.config.to_kv();
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * shape.n_params() + 4 + config.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for v in [shape.dim, shape.m1, shape.m2, NUM_CLASSES] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for v in self.params.flat() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(config.len() as u32).to_le_bytes());
        out.extend_from_slice(config.as_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AbmilError> {
        let fmt = |m: String| AbmilError::Format(m);
        if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
            return Err(fmt("not an ABML checkpoint".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(fmt(format!("unsupported checkpoint version {version}")));
        }
        let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        let (dim, m1, m2, k) = (u32_at(6), u32_at(10), u32_at(14), u32_at(18));
        if k != NUM_CLASSES {
            return Err(fmt(format!("checkpoint has {k} classes, expected {NUM_CLASSES}")));
        }
        let shape = ModelShape::new(dim, m1, m2)?;
        let payload_end = HEADER_LEN + 8 * shape.n_params();
        if bytes.len() < payload_end + 4 {
            return Err(fmt("checkpoint truncated in parameter payload".into()));
        }
        let data = bytes[HEADER_LEN..payload_end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let params = AbmilParams::from_flat(shape, data)?;
        let config_len = u32_at(payload_end);
        let config_bytes = &bytes[payload_end + 4..];
        if config_bytes.len() != config_len {
            return Err(fmt(format!("config section is {} bytes, header says {config_len}", config_bytes.len())));
        }
        let text = std::str::from_utf8(config_bytes).map_err(|e| fmt(format!("config section: {e}")))?;
        let config = TrainConfig::from_kv(text)?;
        if config.model_size != (m1, m2) {
            return Err(fmt("config model_size disagrees with the parameter shape".into()));
        }
        Ok(Checkpoint { params, config })
    }
}

pub fn write_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<(), AbmilError> {
    let path = path.as_ref();
    std::fs::write(path, ckpt.to_bytes()).map_err(|e| AbmilError::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, AbmilError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| AbmilError::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let config = TrainConfig { model_size: (4, 3), ..TrainConfig::default() };
        Checkpoint { params: AbmilParams::init(ModelShape::new(6, 4, 3).unwrap(), 9), config }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let bytes = c.to_bytes();
        assert_eq!(&bytes[..4], b"ABML");
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = sample().to_bytes();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut wrong_k = bytes.clone();
        wrong_k[18] = 4;
        assert!(Checkpoint::from_bytes(&wrong_k).is_err());
        let mut bad_magic = bytes;
        bad_magic[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad_magic).is_err());
    }
}
