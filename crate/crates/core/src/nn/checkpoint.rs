//! Parameter checkpoints.
//!
//! Layout: 8-byte magic, little-endian `u64` header length, UTF-8 JSON
//! header, then every tensor as little-endian `f32` in header order.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Param;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SHRFCN\x00\x01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorInfo {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    architecture: Value,
    metadata: Value,
    tensors: Vec<TensorInfo>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    /// Network description, owned by the caller.
    pub architecture: Value,
    /// Free-form training record.
    pub metadata: Value,
    pub tensors: Vec<(TensorInfo, Vec<f32>)>,
}

impl Checkpoint {
    pub fn from_params(architecture: Value, metadata: Value, params: &[&Param<f32>]) -> Self {
        let tensors = params
            .iter()
            .map(|p| {
                (
                    TensorInfo {
                        name: p.name.clone(),
                        shape: p.shape.clone(),
                    },
                    p.value.clone(),
                )
            })
            .collect();
        Checkpoint {
            architecture,
            metadata,
            tensors,
        }
    }

    /// Copies stored values into `params`, which must match in order, name and shape.
    pub fn load_into(&self, params: &mut [&mut Param<f32>]) -> Result<()> {
        if params.len() != self.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "checkpoint holds {} tensors, model has {}",
                self.tensors.len(),
                params.len()
            )));
        }
        for (i, (p, (info, data))) in params.iter_mut().zip(&self.tensors).enumerate() {
            if p.name != info.name || p.shape != info.shape {
                return Err(Error::Checkpoint(format!(
                    "tensor {i}: checkpoint has {} {:?}, model expects {} {:?}",
                    info.name, info.shape, p.name, p.shape
                )));
            }
            p.value.copy_from_slice(data);
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            architecture: self.architecture.clone(),
            metadata: self.metadata.clone(),
            tensors: self.tensors.iter().map(|(i, _)| i.clone()).collect(),
        };
        let json = serde_json::to_vec(&header)?;
        let n: usize = self.tensors.iter().map(|(_, d)| d.len()).sum();
        let mut out = Vec::with_capacity(16 + json.len() + 4 * n);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, data) in &self.tensors {
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |what: &str| Error::Checkpoint(what.to_string());
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("missing checkpoint magic"));
        }
        let hlen = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let body = bytes
            .get(16..16usize.saturating_add(hlen))
            .ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(body)?;
        let mut blob = &bytes[16 + hlen..];
        let expected: usize = header.tensors.iter().map(TensorInfo::numel).sum();
        if blob.len() != 4 * expected {
            return Err(Error::Checkpoint(format!(
                "parameter blob has {} bytes, header describes {}",
                blob.len(),
                4 * expected
            )));
        }
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for info in header.tensors {
            let (head, rest) = blob.split_at(4 * info.numel());
            let data = head
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            tensors.push((info, data));
            blob = rest;
        }
        Ok(Checkpoint {
            architecture: header.architecture,
            metadata: header.metadata,
            tensors,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn params() -> Vec<Param<f32>> {
        vec![
            Param::new("weight", vec![2, 1, 3], vec![1.5, -0.0, f32::MIN_POSITIVE, 3.0, 1e-30, -7.25], true),
            Param::new("running_var", vec![2], vec![0.5, 2.0], false),
        ]
    }

    #[test]
    fn byte_round_trip_is_exact() {
        let ps = params();
        let refs: Vec<&Param<f32>> = ps.iter().collect();
        let ck = Checkpoint::from_params(json!({"variant": "tiny"}), json!({"epoch": 3}), &refs);
        let back = Checkpoint::from_bytes(&ck.to_bytes().unwrap()).unwrap();
        assert_eq!(back, ck);
        let mut fresh: Vec<Param<f32>> = params()
            .into_iter()
            .map(|mut p| {
                p.value.iter_mut().for_each(|v| *v = 0.0);
                p
            })
            .collect();
        let mut refs: Vec<&mut Param<f32>> = fresh.iter_mut().collect();
        back.load_into(&mut refs).unwrap();
        for (a, b) in fresh.iter().zip(&ps) {
            assert_eq!(
                a.value.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.value.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let ps = params();
        let refs: Vec<&Param<f32>> = ps.iter().collect();
        let bytes = Checkpoint::from_params(json!(null), json!(null), &refs).to_bytes().unwrap();
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(Checkpoint::from_bytes(b"not a checkpoint").is_err());
        let mut wrong = params();
        wrong[0].name = "bias".into();
        let mut refs: Vec<&mut Param<f32>> = wrong.iter_mut().collect();
        let ck = Checkpoint::from_bytes(&bytes).unwrap();
        assert!(matches!(ck.load_into(&mut refs), Err(Error::Checkpoint(_))));
    }
}
