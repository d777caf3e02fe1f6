//! Binary checkpoint format.
//!
//! ```text
//! b"KGCLCKPT"  u32 version
//! u32 header length, UTF-8 `key=value` lines (hyper-parameters, counts)
//! u32 tensor count
//! per tensor: u32 name length, name, u64 rows, u64 cols, rows*cols f64
//! ```
//! All integers and floats are little-endian; tensors are row-major.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::params::{HyperParams, Layer, ParameterSet};
use super::tensor::Tensor;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"KGCLCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub hp: HyperParams,
    pub params: ParameterSet,
}

pub fn write_checkpoint(hp: &HyperParams, params: &ParameterSet) -> Vec<u8> {
    let mut header = String::new();
    for (k, v) in hp.to_pairs() {
        header.push_str(&format!("{k}={v}\n"));
    }
    header.push_str(&format!("num_users={}\n", params.num_users()));
    header.push_str(&format!("num_entities={}\n", params.num_entities()));
    header.push_str(&format!("num_relations={}\n", params.num_relations()));
    match params.external_dim() {
        Some(e) => header.push_str(&format!("external_dim={e}\n")),
        None => header.push_str("external_dim=none\n"),
    }

    let tensors = params.named_tensors();
    let mut out = Vec::with_capacity(64 + header.len() + params.num_scalars() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, t) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
        for x in t.data() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Data(format!("checkpoint truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self, n: usize) -> Result<&'a str> {
        std::str::from_utf8(self.take(n)?).map_err(|_| Error::Data("checkpoint contains invalid UTF-8".into()))
    }
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Data("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Data(format!("unsupported checkpoint version {version}")));
    }
    let header_len = r.u32()? as usize;
    let header = r.string(header_len)?;
    let mut hp = HyperParams::default();
    let mut counts = HashMap::new();
    for line in header.lines() {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Data(format!("bad checkpoint header line `{line}`")))?;
        if HyperParams::KEYS.contains(&k) {
            hp.set(k, v)?;
        } else {
            counts.insert(k.to_string(), v.to_string());
        }
    }
    let count = |key: &str| -> Result<usize> {
        counts
            .get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Data(format!("checkpoint header lacks `{key}`")))
    };
    let (num_users, num_entities, num_relations) =
        (count("num_users")?, count("num_entities")?, count("num_relations")?);
    let external_dim = match counts.get("external_dim").map(String::as_str) {
        Some("none") | None => None,
        Some(_) => Some(count("external_dim")?),
    };

    let n_tensors = r.u32()? as usize;
    let mut tensors: HashMap<String, Tensor> = HashMap::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let name_len = r.u32()? as usize;
        let name = r.string(name_len)?.to_string();
        let rows = r.u64()? as usize;
        let cols = r.u64()? as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Data(format!("tensor `{name}` shape overflows")))?;
        let raw = r.take(
            len.checked_mul(8)
                .ok_or_else(|| Error::Data("tensor too large".into()))?,
        )?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.insert(name, Tensor::from_vec(rows, cols, data));
    }
    if r.pos != bytes.len() {
        return Err(Error::Data("trailing bytes after checkpoint tensors".into()));
    }

    let mut take = |name: &str, shape: (usize, usize)| -> Result<Tensor> {
        let t = tensors
            .remove(name)
            .ok_or_else(|| Error::Data(format!("checkpoint lacks tensor `{name}`")))?;
        if t.shape() != shape {
            return Err(Error::Data(format!(
                "tensor `{name}` has shape {:?}, header implies {shape:?}",
                t.shape()
            )));
        }
        Ok(t)
    };
    let d = hp.dim;
    let user = take("user", (num_users, d))?;
    let entity = take("entity", (num_entities, d))?;
    let relation = take("relation", (num_relations, d))?;
    let layers = (0..hp.layers)
        .map(|i| {
            Ok(Layer {
                weight: take(&format!("layer{i}.weight"), (hp.layer_input_dim(), d))?,
                bias: take(&format!("layer{i}.bias"), (1, d))?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let projection = match external_dim {
        Some(e) => Some(Layer {
            weight: take("projection.weight", (e, d))?,
            bias: take("projection.bias", (1, d))?,
        }),
        None => None,
    };
    if let Some(extra) = tensors.keys().next() {
        return Err(Error::Data(format!("unexpected tensor `{extra}` in checkpoint")));
    }
    Ok(Checkpoint {
        hp,
        params: ParameterSet {
            user,
            entity,
            relation,
            layers,
            projection,
        },
    })
}

pub fn save_checkpoint(path: &Path, hp: &HyperParams, params: &ParameterSet) -> Result<()> {
    crate::data::write_bytes(path, &write_checkpoint(hp, params))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes)
}
