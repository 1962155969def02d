//! Binary checkpoint: magic, version, JSON header, tensor records, CRC-32.
//!
//! ```text
//! "MCVAE\0" | u16 version | u32 header length | header JSON
//! | u32 tensor count | { u16 name length | name | u8 rank | u32 dims.. | f32 values.. }
//! | u32 CRC-32 of everything before it
//! ```
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Cvae, CvaeError, ModelCheckpoint, ModelHyper, TrainingMeta};
use crate::codec::{ConditionLayout, NormalizationStats, Vocabulary};
use crate::numcore::{ParamStore, Tensor};

pub const MAGIC: &[u8; 6] = b"MCVAE\0";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub hyper: ModelHyper,
    pub vocab: Vocabulary,
    pub stats: NormalizationStats,
    pub layout: ConditionLayout,
    pub meta: TrainingMeta,
}

fn io_err(path: &Path, source: std::io::Error) -> CvaeError {
    CvaeError::Io { path: path.display().to_string(), source }
}

fn corrupt(msg: impl Into<String>) -> CvaeError {
    CvaeError::CorruptCheckpoint(msg.into())
}

pub fn save_checkpoint(ckpt: &ModelCheckpoint, path: &Path) -> Result<(), CvaeError> {
    let header = CheckpointHeader {
        hyper: ckpt.hyper.clone(),
        vocab: ckpt.vocab.clone(),
        stats: ckpt.stats,
        layout: ckpt.layout,
        meta: ckpt.meta.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| corrupt(e.to_string()))?;
    let mut out = Vec::with_capacity(64 + json.len() + 4 * ckpt.params.count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(ckpt.params.len() as u32).to_le_bytes());
    for (name, t) in ckpt.params.iter() {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(t.shape.len() as u8);
        for &d in &t.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &x in &t.data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    fs::write(path, out).map_err(|e| io_err(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CvaeError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| corrupt("unexpected end of file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CvaeError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CvaeError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CvaeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn parse_header(r: &mut Reader) -> Result<CheckpointHeader, CvaeError> {
    if r.take(MAGIC.len())? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(CvaeError::VersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let len = r.u32()? as usize;
    serde_json::from_slice(r.take(len)?).map_err(|e| corrupt(format!("header: {e}")))
}

/// Reads only the header block; tensors are not touched.
pub fn read_header(path: &Path) -> Result<CheckpointHeader, CvaeError> {
    use std::io::Read;
    let mut file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut prefix = [0u8; 12];
    file.read_exact(&mut prefix).map_err(|_| corrupt("unexpected end of file"))?;
    let len = u32::from_le_bytes(prefix[8..12].try_into().unwrap()) as usize;
    let mut bytes = prefix.to_vec();
    bytes.resize(12 + len, 0);
    file.read_exact(&mut bytes[12..]).map_err(|_| corrupt("unexpected end of file"))?;
    parse_header(&mut Reader { bytes: &bytes, pos: 0 })
}

/// Loads and verifies a checkpoint against its own condition layout.
pub fn load_checkpoint(path: &Path) -> Result<ModelCheckpoint, CvaeError> {
    load(path, None)
}

/// Loads a checkpoint and rejects it unless its condition dimension equals
/// `layout.dim()`.
pub fn load_checkpoint_with_layout(path: &Path, layout: &ConditionLayout) -> Result<ModelCheckpoint, CvaeError> {
    load(path, Some(layout))
}

fn load(path: &Path, layout: Option<&ConditionLayout>) -> Result<ModelCheckpoint, CvaeError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    let header = parse_header(&mut r)?;
    if bytes.len() < r.pos + 8 {
        return Err(corrupt("unexpected end of file"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(corrupt("checksum mismatch"));
    }
    if let Some(l) = layout {
        if header.hyper.condition_dim != l.dim() {
            return Err(CvaeError::ConditionDimMismatch { checkpoint: header.hyper.condition_dim, layout: l.dim() });
        }
    }
    let mut r = Reader { bytes: body, pos: r.pos };
    let count = r.u32()? as usize;
    let mut params = ParamStore::default();
    for _ in 0..count {
        let name_len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?).map_err(|_| corrupt("tensor name is not UTF-8"))?.to_string();
        let rank = r.u8()? as usize;
        let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
        let n: usize = shape.iter().product();
        let raw = r.take(n.checked_mul(4).ok_or_else(|| corrupt("tensor too large"))?)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        params.add(name, Tensor::new(shape, data).map_err(|e| corrupt(e.to_string()))?);
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes after tensors"));
    }
    Cvae::from_parts(header.hyper, header.vocab, header.stats, header.layout, params, header.meta)
}
