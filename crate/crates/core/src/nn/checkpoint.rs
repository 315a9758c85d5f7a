//! Binary checkpoint: magic, version byte, JSON metadata, named tensors.
//!
//! ```text
//! b"MILPGNN\0" | version u8 | meta_len u32 | meta JSON
//! | count u32 | { name_len u32 | name | ndim u8 | dims u64… | f64… } × count
//! ```
//! All integers and floats are little-endian.

use super::params::ParamStore;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MILPGNN\0";
pub const VERSION: u8 = 1;

pub fn encode_checkpoint(meta: &serde_json::Value, store: &ParamStore) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    let meta = serde_json::to_vec(meta).expect("metadata serialization cannot fail");
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta);
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for (name, t) in store.names().iter().zip(store.tensors()) {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(2);
        out.extend_from_slice(&(t.rows as u64).to_le_bytes());
        out.extend_from_slice(&(t.cols as u64).to_le_bytes());
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format {
                offset: self.pos,
                msg: format!("truncated while reading {what}"),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self, what: &str) -> Result<usize> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")) as usize)
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<(serde_json::Value, ParamStore)> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len(), "magic")? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            msg: "not a checkpoint (bad magic)".into(),
        });
    }
    let version = r.take(1, "version")?[0];
    if version != VERSION {
        return Err(Error::Format {
            offset: MAGIC.len(),
            msg: format!("unsupported checkpoint version {version}"),
        });
    }
    let meta_len = r.u32("metadata length")?;
    let meta_at = r.pos;
    let meta = serde_json::from_slice(r.take(meta_len, "metadata")?).map_err(|e| Error::Format {
        offset: meta_at,
        msg: format!("metadata: {e}"),
    })?;
    let count = r.u32("tensor count")?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let name_at = r.pos;
        let name_len = r.u32("name length")?;
        let name = std::str::from_utf8(r.take(name_len, "name")?)
            .map_err(|_| Error::Format {
                offset: name_at,
                msg: "tensor name is not UTF-8".into(),
            })?
            .to_string();
        let ndim_at = r.pos;
        let ndim = r.take(1, "ndim")?[0];
        if ndim != 2 {
            return Err(Error::Format {
                offset: ndim_at,
                msg: format!("tensor {name} has {ndim} dims, expected 2"),
            });
        }
        let rows = r.u64("dims")?;
        let cols = r.u64("dims")?;
        let n = rows.checked_mul(cols).filter(|n| n.checked_mul(8).is_some()).ok_or(Error::Format {
            offset: ndim_at,
            msg: "tensor too large".into(),
        })?;
        let raw = r.take(n * 8, "tensor data")?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        store.add(name, Tensor::from_vec(rows, cols, data));
    }
    if r.pos != bytes.len() {
        return Err(Error::Format {
            offset: r.pos,
            msg: "trailing bytes after the last tensor".into(),
        });
    }
    Ok((meta, store))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> ParamStore {
        let mut s = ParamStore::new();
        s.add("a.w", Tensor::from_vec(2, 2, vec![1.0, -2.5, 3.25, f64::MIN_POSITIVE]));
        s.add("a.b", Tensor::zeros(1, 2));
        s
    }

    #[test]
    fn round_trip() {
        let meta = serde_json::json!({"k": 1});
        let bytes = encode_checkpoint(&meta, &store());
        let (m, s) = decode_checkpoint(&bytes).unwrap();
        assert_eq!((m, s), (meta, store()));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode_checkpoint(&serde_json::json!({}), &store());
        let cut = bytes.len() - 3;
        match decode_checkpoint(&bytes[..cut]) {
            Err(Error::Format { offset, .. }) => assert!(offset > MAGIC.len() && offset <= cut),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(decode_checkpoint(b"nope"), Err(Error::Format { offset: 0, .. })));
    }
}
