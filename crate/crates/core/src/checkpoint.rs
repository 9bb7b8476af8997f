//! Binary checkpoints and canonical state encoding.
//!
//! A checkpoint is an 8-byte magic, a little-endian `u32` format version and
//! a bincode body. Floats are stored as raw IEEE-754 bits, so a round trip is
//! value-exact.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SQDRIFT\0";
const VERSION: u32 = 1;

pub fn encode<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let body = bincode::serialize(value).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut out = Vec::with_capacity(MAGIC.len() + 4 + body.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn decode<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    let header = MAGIC.len() + 4;
    if bytes.len() < header || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[MAGIC.len()..header].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    bincode::deserialize(&bytes[header..]).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn save<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, encode(value)?)?;
    Ok(())
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    decode(&fs::read(path)?)
}

/// Size in bytes of the canonical binary encoding of `value`.
pub fn encoded_len<T: Serialize>(value: &T) -> u64 {
    bincode::serialized_size(value).expect("in-memory state always serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discriminator::Discriminator;
    use crate::oselm::{OselmModel, OselmParams};

    #[test]
    fn model_round_trip_is_exact() {
        let mut m = OselmModel::new(OselmParams::new(5, 3).with_seed(12)).unwrap();
        for i in 0..20 {
            m.seq_train(&[0.1 * i as f64, 0.3, 0.7, 1.0 / (i + 1) as f64, 0.0]).unwrap();
        }
        let back: OselmModel = decode(&encode(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        let bits = |m: &OselmModel| m.p().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&m));
    }

    #[test]
    fn discriminator_round_trip_through_file() {
        let xs = vec![vec![0.0, 0.1], vec![0.1, 0.0], vec![1.0, 0.9], vec![0.9, 1.0]];
        let d = Discriminator::fit_initial(&xs, &[0, 0, 1, 1], 2, &OselmParams::new(2, 3), 2, 1.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save(&d, &path).unwrap();
        let back: Discriminator = load(&path).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn rejects_foreign_bytes() {
        assert!(decode::<OselmModel>(b"hello world, not a model").is_err());
        let mut bytes = encode(&1u8).unwrap();
        bytes[8] = 9;
        assert!(decode::<u8>(&bytes).is_err());
    }
}
