//! RIFF/WAVE and raw float64 output.

use std::fs;
use std::path::Path;

use brirsim_core::ImpulseResponse;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleFormat {
    #[default]
    Float32,
    Int16,
}

#[derive(Debug, Error)]
pub enum WaveError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("sample {value} exceeds int16 full scale; normalize the response or write float32")]
    Clipping { value: f64 },
    #[error("non-finite sample")]
    NonFinite,
    #[error("response has no channels")]
    NoChannels,
    #[error("not a RIFF/WAVE file")]
    NotWave,
    #[error("malformed chunk: {0}")]
    Malformed(&'static str),
    #[error("unsupported format tag {format} with {bits} bits")]
    Format { format: u16, bits: u16 },
}

fn io_error(path: &Path, source: std::io::Error) -> WaveError {
    WaveError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Encode `ir` as a canonical 44-byte-header WAVE file.
pub fn encode_wave(ir: &ImpulseResponse, format: SampleFormat) -> Result<Vec<u8>, WaveError> {
    let channels = ir.num_channels();
    if channels == 0 {
        return Err(WaveError::NoChannels);
    }
    if !ir.is_finite() {
        return Err(WaveError::NonFinite);
    }
    let (tag, bytes_per) = match format {
        SampleFormat::Float32 => (FORMAT_FLOAT, 4usize),
        SampleFormat::Int16 => {
            if let Some(&value) = ir.channels.iter().flatten().find(|v| v.abs() > 1.0) {
                return Err(WaveError::Clipping { value });
            }
            (FORMAT_PCM, 2usize)
        }
    };
    let frames = ir.len();
    let data_len = frames * channels * bytes_per;
    let block_align = channels * bytes_per;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&(channels as u16).to_le_bytes());
    out.extend_from_slice(&ir.fs.to_le_bytes());
    out.extend_from_slice(&((ir.fs as usize * block_align) as u32).to_le_bytes());
    out.extend_from_slice(&(block_align as u16).to_le_bytes());
    out.extend_from_slice(&((bytes_per * 8) as u16).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for n in 0..frames {
        for ch in &ir.channels {
            match format {
                SampleFormat::Float32 => out.extend_from_slice(&(ch[n] as f32).to_le_bytes()),
                SampleFormat::Int16 => {
                    let q = (ch[n] * 32767.0).round() as i16;
                    out.extend_from_slice(&q.to_le_bytes());
                }
            }
        }
    }
    Ok(out)
}

pub fn write_wave(ir: &ImpulseResponse, path: impl AsRef<Path>, format: SampleFormat) -> Result<(), WaveError> {
    let path = path.as_ref();
    let bytes = encode_wave(ir, format)?;
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

/// Decode a PCM16 or float32 WAVE file; unknown chunks are skipped.
pub fn decode_wave(bytes: &[u8]) -> Result<ImpulseResponse, WaveError> {
    if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WaveError::NotWave);
    }
    let mut pos = 12;
    let mut fmt = None;
    let mut data = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32_at(bytes, pos + 4) as usize;
        let body = pos + 8;
        let end = body.checked_add(len).filter(|&e| e <= bytes.len()).ok_or(WaveError::Malformed("chunk overruns file"))?;
        match id {
            b"fmt " => {
                if len < 16 {
                    return Err(WaveError::Malformed("fmt chunk shorter than 16 bytes"));
                }
                let b = &bytes[body..end];
                fmt = Some((u16_at(b, 0), u16_at(b, 2), u32_at(b, 4), u16_at(b, 14)));
            }
            b"data" => data = Some(&bytes[body..end]),
            _ => {}
        }
        pos = end + (len & 1);
    }
    let (format, channels, fs, bits) = fmt.ok_or(WaveError::Malformed("missing fmt chunk"))?;
    let data = data.ok_or(WaveError::Malformed("missing data chunk"))?;
    let channels = channels as usize;
    if channels == 0 {
        return Err(WaveError::Malformed("zero channels"));
    }
    let width = match (format, bits) {
        (FORMAT_FLOAT, 32) => 4,
        (FORMAT_PCM, 16) => 2,
        _ => return Err(WaveError::Format { format, bits }),
    };
    if data.len() % (width * channels) != 0 {
        return Err(WaveError::Malformed("data length is not a whole number of frames"));
    }
    let frames = data.len() / (width * channels);
    let mut ir = ImpulseResponse::zeros(fs, channels, frames);
    for (i, s) in data.chunks_exact(width).enumerate() {
        let v = if width == 4 {
            f64::from(f32::from_le_bytes(s.try_into().unwrap()))
        } else {
            f64::from(i16::from_le_bytes([s[0], s[1]])) / 32768.0
        };
        ir.channels[i % channels][i / channels] = v;
    }
    Ok(ir)
}

pub fn read_wave(path: impl AsRef<Path>) -> Result<ImpulseResponse, WaveError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    decode_wave(&bytes)
}

/// Raw little-endian float64 samples, channel after channel.
pub fn write_f64raw(ir: &ImpulseResponse, path: impl AsRef<Path>) -> Result<(), WaveError> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(ir.num_channels() * ir.len() * 8);
    for v in ir.channels.iter().flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| io_error(path, e))
}
