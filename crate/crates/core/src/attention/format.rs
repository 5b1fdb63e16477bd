//! The ATTN container.
//!
//! All integers little-endian.
//!
//! ```text
//! file    = "ATTN" version:u32 (=1) count:u64 sample*count
//! sample  = id_len:u16 id:[u8; id_len] (UTF-8) label:u8
//!           layers:u16 heads:u16 tokens:u16
//!           matrix*(layers*heads)           layer-major, head-minor
//! matrix  = f32 * (tokens*tokens)           row-major
//! ```

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{validate_tensor, AttentionTensor, Sample, Violation, MAX_ID_BYTES};
use crate::homology::MAX_TOKENS;

pub const MAGIC: [u8; 4] = *b"ATTN";
pub const FORMAT_VERSION: u32 = 1;
/// Magic, version and sample count.
pub const FILE_HEADER_LEN: usize = 16;
/// Fixed part of a sample header (id length, label, three dimensions).
const SAMPLE_HEADER_FIXED: usize = 2 + 1 + 2 + 2 + 2;

/// Which sample an error refers to: its position in the file and, once
/// read, its id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRef {
    pub index: u64,
    pub id: Option<String>,
}

impl fmt::Display for SampleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.id {
            Some(id) => write!(f, "#{} \"{}\"", self.index, id.escape_debug()),
            None => write!(f, "#{}", self.index),
        }
    }
}

#[derive(Debug, Error)]
pub enum AttnError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("byte 0: missing ATTN magic")]
    BadMagic,
    #[error("byte {offset}: unsupported format version {found} (expected {FORMAT_VERSION})")]
    VersionMismatch { offset: u64, found: u32 },
    #[error("byte {offset}: file header truncated")]
    TruncatedHeader { offset: u64 },
    #[error("byte {offset}: sample {sample} truncated in {field}")]
    Truncated {
        offset: u64,
        sample: SampleRef,
        field: &'static str,
    },
    #[error("byte {offset}: sample {sample} has a malformed header: {reason}")]
    Malformed {
        offset: u64,
        sample: SampleRef,
        reason: String,
    },
    #[error("byte {offset}: {count} trailing bytes after the last sample")]
    TrailingBytes { offset: u64, count: u64 },
    #[error("byte {offset}: sample {sample} violates tensor invariants ({} violation(s), first: {})", violations.len(), violations[0])]
    InvalidTensor {
        offset: u64,
        sample: SampleRef,
        violations: Vec<Violation>,
    },
    #[error("sample {sample} cannot be written: {reason}")]
    Unwritable { sample: SampleRef, reason: String },
}

impl AttnError {
    /// Byte offset of the problem within the file, when it has one.
    pub fn offset(&self) -> Option<u64> {
        match self {
            AttnError::BadMagic => Some(0),
            AttnError::VersionMismatch { offset, .. }
            | AttnError::TruncatedHeader { offset }
            | AttnError::Truncated { offset, .. }
            | AttnError::Malformed { offset, .. }
            | AttnError::TrailingBytes { offset, .. }
            | AttnError::InvalidTensor { offset, .. } => Some(*offset),
            AttnError::Io { .. } | AttnError::Unwritable { .. } => None,
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn take(&mut self, len: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(len)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes([b[0], b[1]]))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// Parses and validates every sample.
pub fn decode_attn(bytes: &[u8]) -> Result<Vec<Sample>, AttnError> {
    decode(bytes, true)
}

/// Parses the container without checking tensor invariants, so that a caller
/// can collect every violation itself.
pub fn decode_attn_unvalidated(bytes: &[u8]) -> Result<Vec<Sample>, AttnError> {
    decode(bytes, false)
}

pub fn read_attn_file(path: impl AsRef<Path>) -> Result<Vec<Sample>, AttnError> {
    decode_attn(&read(path.as_ref())?)
}

pub fn read_attn_file_unvalidated(path: impl AsRef<Path>) -> Result<Vec<Sample>, AttnError> {
    decode_attn_unvalidated(&read(path.as_ref())?)
}

fn read(path: &Path) -> Result<Vec<u8>, AttnError> {
    fs::read(path).map_err(|source| AttnError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn decode(bytes: &[u8], validate: bool) -> Result<Vec<Sample>, AttnError> {
    let mut cur = Cursor { bytes, pos: 0 };
    match cur.take(4) {
        Some(magic) if magic == MAGIC => {}
        Some(_) => return Err(AttnError::BadMagic),
        None if bytes.starts_with(&MAGIC[..bytes.len()]) => {
            return Err(AttnError::TruncatedHeader { offset: 0 })
        }
        None => return Err(AttnError::BadMagic),
    }
    let version = cur
        .take(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .ok_or(AttnError::TruncatedHeader { offset: 4 })?;
    if version != FORMAT_VERSION {
        return Err(AttnError::VersionMismatch {
            offset: 4,
            found: version,
        });
    }
    let count = cur
        .take(8)
        .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
        .ok_or(AttnError::TruncatedHeader { offset: 8 })?;

    let mut samples = Vec::new();
    for index in 0..count {
        samples.push(decode_sample(&mut cur, index, validate)?);
    }
    if cur.remaining() > 0 {
        return Err(AttnError::TrailingBytes {
            offset: cur.offset(),
            count: cur.remaining() as u64,
        });
    }
    Ok(samples)
}

fn decode_sample(cur: &mut Cursor<'_>, index: u64, validate: bool) -> Result<Sample, AttnError> {
    let mut sample = SampleRef { index, id: None };
    let truncated = |offset, sample: &SampleRef, field| AttnError::Truncated {
        offset,
        sample: sample.clone(),
        field,
    };

    let start = cur.offset();
    let id_len = cur
        .u16()
        .ok_or_else(|| truncated(start, &sample, "id length"))? as usize;
    let id_offset = cur.offset();
    let id_bytes = cur
        .take(id_len)
        .ok_or_else(|| truncated(id_offset, &sample, "id"))?;
    let id = match std::str::from_utf8(id_bytes) {
        Ok(id) => id.to_string(),
        Err(e) => {
            return Err(AttnError::Malformed {
                offset: id_offset,
                sample,
                reason: format!("id is not UTF-8 ({e})"),
            })
        }
    };
    if id.is_empty() || id.len() > MAX_ID_BYTES {
        return Err(AttnError::Malformed {
            offset: start,
            sample,
            reason: format!("id length {} outside 1..={MAX_ID_BYTES}", id.len()),
        });
    }
    sample.id = Some(id.clone());

    let label_offset = cur.offset();
    let label = cur
        .take(1)
        .ok_or_else(|| truncated(label_offset, &sample, "label"))?[0];
    if label > 1 {
        return Err(AttnError::Malformed {
            offset: label_offset,
            sample,
            reason: format!("label {label} is not 0 or 1"),
        });
    }

    let dims_offset = cur.offset();
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = cur
            .u16()
            .ok_or_else(|| truncated(cur.offset(), &sample, "dimensions"))? as usize;
    }
    let [layers, heads, tokens] = dims;
    if layers == 0 || heads == 0 || tokens == 0 || tokens > MAX_TOKENS {
        return Err(AttnError::Malformed {
            offset: dims_offset,
            sample,
            reason: format!(
                "shape {layers}x{heads}x{tokens} (each must be ≥ 1, tokens ≤ {MAX_TOKENS})"
            ),
        });
    }

    let matrix_offset = cur.offset();
    let n_weights = layers * heads * tokens * tokens;
    let payload = cur
        .take(n_weights * 4)
        .ok_or_else(|| truncated(matrix_offset, &sample, "attention matrices"))?;
    let weights: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let tensor = AttentionTensor::new(layers, heads, tokens, weights)
        .expect("shape and length checked above");

    if validate {
        let violations = validate_tensor(&tensor);
        if !violations.is_empty() {
            return Err(AttnError::InvalidTensor {
                offset: matrix_offset,
                sample,
                violations,
            });
        }
    }
    Ok(Sample { id, label, tensor })
}

/// Exact size in bytes of the encoding of `samples`.
pub fn encoded_len(samples: &[Sample]) -> usize {
    FILE_HEADER_LEN
        + samples
            .iter()
            .map(|s| SAMPLE_HEADER_FIXED + s.id.len() + 4 * s.tensor.weights().len())
            .sum::<usize>()
}

/// Encodes valid samples. Nothing is produced if any sample is invalid.
pub fn encode_attn(samples: &[Sample]) -> Result<Vec<u8>, AttnError> {
    for (index, s) in samples.iter().enumerate() {
        let sample = || SampleRef {
            index: index as u64,
            id: Some(s.id.clone()),
        };
        if let Err(e) = s.check_header() {
            return Err(AttnError::Unwritable {
                sample: sample(),
                reason: e.to_string(),
            });
        }
        if let Some(v) = validate_tensor(&s.tensor).first() {
            return Err(AttnError::Unwritable {
                sample: sample(),
                reason: format!("tensor invariant violated at {v}"),
            });
        }
    }

    let mut out = Vec::with_capacity(encoded_len(samples));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for s in samples {
        out.extend_from_slice(&(s.id.len() as u16).to_le_bytes());
        out.extend_from_slice(s.id.as_bytes());
        out.push(s.label);
        let t = &s.tensor;
        for d in [t.layers(), t.heads(), t.tokens()] {
            out.extend_from_slice(&(d as u16).to_le_bytes());
        }
        for w in t.weights() {
            out.extend_from_slice(&w.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_attn_file(samples: &[Sample], path: impl AsRef<Path>) -> Result<(), AttnError> {
    let path = path.as_ref();
    let bytes = encode_attn(samples)?;
    fs::write(path, bytes).map_err(|source| AttnError::Io {
        path: path.to_path_buf(),
        source,
    })
}
