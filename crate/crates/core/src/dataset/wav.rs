//! 16-bit PCM RIFF/WAVE codec.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

pub const FULL_SCALE: f64 = 32768.0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WavData {
    pub format_tag: u16,
    pub channels: u16,
    pub sample_rate: u32,
    pub bits_per_sample: u16,
    pub samples: Vec<i16>,
}

impl WavData {
    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&s| f64::from(s) / FULL_SCALE).collect()
    }
}

pub fn encode_mono_i16(samples: &[i16], sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<WavData> {
    if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Wav("missing RIFF/WAVE header".into()));
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body = bytes.get(pos + 8..pos + 8 + len).ok_or_else(|| Error::Wav("chunk runs past end of file".into()))?;
        match id {
            b"fmt " => {
                if len < 16 {
                    return Err(Error::Wav("short fmt chunk".into()));
                }
                let u16_at = |i: usize| u16::from_le_bytes([body[i], body[i + 1]]);
                fmt = Some((u16_at(0), u16_at(2), u32::from_le_bytes(body[4..8].try_into().unwrap()), u16_at(14)));
            }
            b"data" => {
                let (format_tag, channels, sample_rate, bits_per_sample) =
                    fmt.ok_or_else(|| Error::Wav("data chunk before fmt chunk".into()))?;
                if bits_per_sample != 16 {
                    return Err(Error::Wav(format!("{bits_per_sample}-bit samples are not supported")));
                }
                let samples = body.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]])).collect();
                return Ok(WavData { format_tag, channels, sample_rate, bits_per_sample, samples });
            }
            _ => {}
        }
        pos += 8 + len + (len & 1);
    }
    Err(Error::Wav("no data chunk".into()))
}

pub fn write(path: &Path, samples: &[i16], sample_rate: u32) -> Result<()> {
    std::fs::write(path, encode_mono_i16(samples, sample_rate)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<WavData> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Quantizes to 16 bits with triangular (TPDF) dither.
///
/// The dithered result is kept within one LSB of the exact value, so peaks
/// never grow by more than one quantization step.
pub fn quantize_tpdf<R: Rng + ?Sized>(samples: &[f64], rng: &mut R) -> Vec<i16> {
    samples
        .iter()
        .map(|&x| {
            let scaled = x * FULL_SCALE;
            let dither = rng.random::<f64>() - rng.random::<f64>();
            let q = (scaled + dither).round().clamp(scaled.floor(), scaled.ceil());
            q.clamp(-FULL_SCALE, FULL_SCALE - 1.0) as i16
        })
        .collect()
}
