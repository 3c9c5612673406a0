//! Binary feature file, little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "GZFT"
//! 4       4     dim (u32, > 0)
//! 8       4     row count (u32)
//! 12      ...   rows: frame u32, superpixel id u32, dim x f32
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::FeatureTable;
use crate::error::{Error, Result};
use crate::superpixels::{SuperpixelFrame, SuperpixelRef};

pub const FEATURE_MAGIC: [u8; 4] = *b"GZFT";

pub fn encode_precomputed(table: &FeatureTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + table.len() * (8 + 4 * table.dim()));
    out.extend_from_slice(&FEATURE_MAGIC);
    out.extend_from_slice(&(table.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(table.len() as u32).to_le_bytes());
    for (key, row) in table.iter() {
        out.extend_from_slice(&(key.frame as u32).to_le_bytes());
        out.extend_from_slice(&(key.id as u32).to_le_bytes());
        for &v in row {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_precomputed(bytes: &[u8], source: &Path) -> Result<FeatureTable> {
    let bad = |message: String| Error::Parse {
        path: source.to_path_buf(),
        line: 0,
        message,
    };
    if bytes.len() < 12 || bytes[..4] != FEATURE_MAGIC {
        return Err(bad("not a feature file (bad magic)".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    let dim = u32_at(4) as usize;
    let rows = u32_at(8) as usize;
    if dim == 0 {
        return Err(bad("feature dimension is 0".into()));
    }
    let row_bytes = 8 + 4 * dim;
    if bytes.len() != 12 + rows * row_bytes {
        return Err(bad(format!(
            "expected {} bytes for {rows} rows of dim {dim}, found {}",
            12 + rows * row_bytes,
            bytes.len()
        )));
    }
    let mut table = FeatureTable::new(dim);
    let mut seen = HashSet::new();
    let mut row = vec![0.0f64; dim];
    for r in 0..rows {
        let o = 12 + r * row_bytes;
        let key = SuperpixelRef::new(u32_at(o) as usize, u32_at(o + 4) as usize);
        if !seen.insert(key) {
            return Err(bad(format!("duplicate row for superpixel {} in frame {}", key.id, key.frame)));
        }
        for (k, v) in row.iter_mut().enumerate() {
            *v = f32::from_le_bytes(
                bytes[o + 8 + 4 * k..o + 12 + 4 * k]
                    .try_into()
                    .expect("slice of four bytes"),
            ) as f64;
        }
        table.insert(key, &row)?;
    }
    Ok(table)
}

pub fn write_precomputed(table: &FeatureTable, path: &Path) -> Result<()> {
    fs::write(path, encode_precomputed(table)).map_err(|e| Error::io(path, e))
}

/// Reads a feature file and checks it has exactly one row per superpixel of
/// `frames`.
pub fn load_precomputed(path: &Path, frames: &[SuperpixelFrame]) -> Result<FeatureTable> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let table = decode_precomputed(&bytes, path)?;
    table.check_complete(frames)?;
    let expected: usize = frames.iter().map(SuperpixelFrame::len).sum();
    if table.len() != expected {
        return Err(Error::InvalidInput(format!(
            "{}: {} feature rows for {expected} superpixels",
            path.display(),
            table.len()
        )));
    }
    Ok(table)
}
