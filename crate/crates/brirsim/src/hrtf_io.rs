//! The native HRTF container.
//!
//! Layout: `HRTFSET1`, a little-endian `u32` header length, a UTF-8 JSON
//! header, `M*2*N` little-endian `f32` samples (direction-major, then left
//! and right) and a little-endian CRC32 of the sample block.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use brirsim_core::hrtf::{HrtfError, HrtfSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"HRTFSET1";

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic, not an HRTF container")]
    BadMagic,
    #[error("file ends inside the header")]
    TruncatedHeader,
    #[error("malformed header: {0}")]
    Header(String),
    #[error("header declares {0} channels, containers hold 2")]
    Channels(u32),
    #[error("header lists {positions} positions for {declared} directions")]
    PositionCount { declared: usize, positions: usize },
    #[error("data block shorter than M·2·N ({got} of {expected} bytes)")]
    ShortData { expected: usize, got: usize },
    #[error("{0} trailing bytes after the checksum")]
    Trailing(usize),
    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error(transparent)]
    Invalid(#[from] HrtfError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub fs: u32,
    pub num_directions: usize,
    pub ir_length: usize,
    pub channels: u32,
    pub positions: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

/// Serialize `set`; samples are narrowed to `f32`.
pub fn to_bytes(set: &HrtfSet) -> Vec<u8> {
    let header = Header {
        fs: set.fs(),
        num_directions: set.len(),
        ir_length: set.ir_length(),
        channels: 2,
        positions: set.positions().to_vec(),
        metadata: set.metadata().clone(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut data = Vec::with_capacity(set.data().len() * 4);
    for &v in set.data() {
        data.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let mut out = Vec::with_capacity(16 + json.len() + data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&data);
    out.extend_from_slice(&crc32fast::hash(&data).to_le_bytes());
    out
}

/// Parse only the header.
pub fn read_header(bytes: &[u8]) -> Result<(Header, usize), ContainerError> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    if bytes.len() < 12 {
        return Err(ContainerError::TruncatedHeader);
    }
    let h = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let end = 12usize.checked_add(h).filter(|&e| e <= bytes.len()).ok_or(ContainerError::TruncatedHeader)?;
    let header: Header = serde_json::from_slice(&bytes[12..end]).map_err(|e| ContainerError::Header(e.to_string()))?;
    if header.channels != 2 {
        return Err(ContainerError::Channels(header.channels));
    }
    if header.positions.len() != header.num_directions {
        return Err(ContainerError::PositionCount {
            declared: header.num_directions,
            positions: header.positions.len(),
        });
    }
    Ok((header, end))
}

pub fn from_bytes(bytes: &[u8]) -> Result<HrtfSet, ContainerError> {
    let (header, start) = read_header(bytes)?;
    let samples = header
        .num_directions
        .checked_mul(2 * header.ir_length)
        .ok_or_else(|| ContainerError::Header("sample count overflows".into()))?;
    let expected = samples * 4;
    let rest = &bytes[start..];
    if rest.len() < expected + 4 {
        return Err(ContainerError::ShortData {
            expected,
            got: rest.len().min(expected),
        });
    }
    if rest.len() > expected + 4 {
        return Err(ContainerError::Trailing(rest.len() - expected - 4));
    }
    let data = &rest[..expected];
    let stored = u32::from_le_bytes(rest[expected..].try_into().unwrap());
    let computed = crc32fast::hash(data);
    if stored != computed {
        return Err(ContainerError::Checksum { stored, computed });
    }
    let values = data
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Ok(HrtfSet::new(header.fs, header.ir_length, header.positions, values, header.metadata)?)
}

pub fn load_hrtf(path: impl AsRef<Path>) -> Result<HrtfSet, ContainerError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })?;
    from_bytes(&bytes)
}

pub fn save_hrtf(set: &HrtfSet, path: impl AsRef<Path>) -> Result<(), ContainerError> {
    let path = path.as_ref();
    fs::write(path, to_bytes(set)).map_err(|source| ContainerError::Io {
        path: path.display().to_string(),
        source,
    })
}
