//! Binary checkpoint container.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic        8 bytes   "SUBSPCKP"
//! version      u32       1
//! d            u32
//! n            u32
//! seed         u64
//! step         u64
//! lambda       n × f64   diagonal of Λ
//! node_count   u32
//! per node:
//!   name_len   u32
//!   name       name_len bytes of UTF-8
//!   span       d·n × f64, row-major
//! ```
//!
//! Floats are stored as raw bit patterns, so a round trip is exact.

use std::path::Path;

use subspace_core::training::EmbeddingTable;
use subspace_core::{Matrix, Regularizer, SpanMatrix};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 8] = b"SUBSPCKP";
pub const VERSION: u32 = 1;

pub fn encode(table: &EmbeddingTable) -> Vec<u8> {
    let (d, n) = (table.d(), table.n());
    let mut out = Vec::with_capacity(48 + table.len() * (16 + 8 * d * n));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&table.seed().to_le_bytes());
    out.extend_from_slice(&table.step().to_le_bytes());
    for l in table.regularizer().diag() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&(table.len() as u32).to_le_bytes());
    for (name, span) in table.names().iter().zip(table.spans()) {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        for x in span.matrix().as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize, what: &str) -> std::result::Result<&'a [u8], String> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| {
                format!(
                    "truncated while reading {what} at byte {} (file has {})",
                    self.pos,
                    self.buf.len()
                )
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64s(&mut self, count: usize, what: &str) -> std::result::Result<Vec<f64>, String> {
        let bytes = self.take(count.checked_mul(8).ok_or("size overflow")?, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

fn decode_inner(buf: &[u8]) -> std::result::Result<EmbeddingTable, String> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err("not a checkpoint (bad magic)".into());
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(format!(
            "unsupported checkpoint version {version}, expected {VERSION}"
        ));
    }
    let d = r.u32("d")? as usize;
    let n = r.u32("n")? as usize;
    let seed = r.u64("seed")?;
    let step = r.u64("step")?;
    let lambda = r.f64s(n, "lambda")?;
    let count = r.u32("node count")? as usize;
    let mut names = Vec::with_capacity(count.min(1 << 16));
    let mut spans = Vec::with_capacity(count.min(1 << 16));
    for i in 0..count {
        let len = r.u32("name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "name")?)
            .map_err(|_| format!("node {i} has a name that is not UTF-8"))?;
        names.push(name.to_owned());
        let data = r.f64s(d * n, "span matrix")?;
        let m = Matrix::new(d, n, data).map_err(|e| e.to_string())?;
        spans.push(SpanMatrix::new(m).map_err(|e| format!("node '{name}': {e}"))?);
    }
    if r.pos != buf.len() {
        return Err(format!(
            "{} trailing bytes after the last node",
            buf.len() - r.pos
        ));
    }
    let reg = Regularizer::new(lambda).map_err(|e| e.to_string())?;
    EmbeddingTable::new(names, spans, reg, seed, step).map_err(|e| e.to_string())
}

pub fn decode(buf: &[u8], path: &Path) -> Result<EmbeddingTable> {
    decode_inner(buf).map_err(|m| CliError::format(path, m))
}

pub fn save(path: &Path, table: &EmbeddingTable) -> Result<()> {
    std::fs::write(path, encode(table)).map_err(|e| CliError::io(path, e))
}

pub fn load(path: &Path) -> Result<EmbeddingTable> {
    let buf = std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::Usage(format!("checkpoint {} does not exist", path.display()))
        } else {
            CliError::io(path, e)
        }
    })?;
    decode(&buf, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use subspace_core::training::init_table;

    fn table() -> EmbeddingTable {
        let names = vec!["root".to_string(), "naïve".to_string(), "x".to_string()];
        let reg = Regularizer::new(vec![0.2, 0.3]).unwrap();
        init_table(names, 3, 2, reg, 0.7, 42).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let t = table();
        let bytes = encode(&t);
        assert_eq!(&bytes[..8], MAGIC);
        let back = decode(&bytes, Path::new("x")).unwrap();
        assert_eq!(back, t);
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn layout_size() {
        let bytes = encode(&table());
        let names = 4 + 6 + 1;
        assert_eq!(
            bytes.len(),
            8 + 4 * 3 + 8 * 2 + 8 * 2 + 4 + 3 * 4 + names + 3 * 6 * 8
        );
    }

    #[test]
    fn every_truncation_fails() {
        let bytes = encode(&table());
        for cut in 0..bytes.len() {
            assert!(
                decode(&bytes[..cut], Path::new("x")).is_err(),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn trailing_bytes_and_bad_header() {
        let mut bytes = encode(&table());
        bytes.push(0);
        assert!(decode(&bytes, Path::new("x"))
            .unwrap_err()
            .to_string()
            .contains("trailing"));
        let mut bytes = encode(&table());
        bytes[8] = 2;
        assert!(decode(&bytes, Path::new("x"))
            .unwrap_err()
            .to_string()
            .contains("version 2"));
        let mut bytes = encode(&table());
        bytes[0] = b'X';
        assert!(decode(&bytes, Path::new("x")).is_err());
    }
}
