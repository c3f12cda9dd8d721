//! Mastering: BS.1770-4 integrated loudness, per-stem normalization,
//! summation and a uniform peak guard.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::AudioBuffer;

/// Normalized second-order IIR section (`a0 = 1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    /// Direct form I over a whole buffer with zero initial state.
    pub fn process(&self, x: &[f64]) -> Vec<f64> {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
        x.iter()
            .map(|&x0| {
                let y0 = b0 * x0 + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
                x2 = x1;
                x1 = x0;
                y2 = y1;
                y1 = y0;
                y0
            })
            .collect()
    }
}

/// K-weighting stage 1: high-shelf of about +4 dB above 1.5 kHz.
///
/// Bilinear transform of the analog shelf prototype, prewarped at `fc`;
/// at 48 kHz this reproduces the tabulated coefficients.
pub fn k_shelf(sample_rate: f64) -> Biquad {
    let (gain_db, q, fc) = (3.99984385397, 0.7071752369554193, 1681.9744509555319);
    let k = (PI * fc / sample_rate).tan();
    let vh = 10f64.powf(gain_db / 20.0);
    let vb = vh.powf(0.4996667741545416);
    let a0 = 1.0 + k / q + k * k;
    Biquad {
        b: [(vh + vb * k / q + k * k) / a0, 2.0 * (k * k - vh) / a0, (vh - vb * k / q + k * k) / a0],
        a: [1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0],
    }
}

/// K-weighting stage 2: second-order high-pass near 38 Hz with numerator
/// `(1, -2, 1)`.
pub fn k_highpass(sample_rate: f64) -> Biquad {
    let (q, fc) = (0.5003270373253953, 38.13547087613982);
    let k = (PI * fc / sample_rate).tan();
    let a0 = 1.0 + k / q + k * k;
    Biquad { b: [1.0, -2.0, 1.0], a: [1.0, 2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0] }
}

/// Result of an integrated-loudness measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Loudness {
    Lufs(f64),
    /// Every gating block is below the absolute gate.
    Silence,
}

impl Loudness {
    pub fn lufs(self) -> Option<f64> {
        match self {
            Loudness::Lufs(l) => Some(l),
            Loudness::Silence => None,
        }
    }
}

/// Gated integrated loudness meter for mono signals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoudnessMeter {
    pub block_s: f64,
    pub overlap: f64,
    pub absolute_gate: f64,
    pub relative_gate: f64,
}

impl Default for LoudnessMeter {
    fn default() -> Self {
        LoudnessMeter { block_s: 0.4, overlap: 0.75, absolute_gate: -70.0, relative_gate: -10.0 }
    }
}

fn block_loudness(mean_square: f64) -> f64 {
    -0.691 + 10.0 * mean_square.log10()
}

impl LoudnessMeter {
    pub fn block_len(&self, sample_rate: u32) -> usize {
        (self.block_s * f64::from(sample_rate)).round() as usize
    }

    /// Mean square of each K-weighted gating block.
    pub fn block_powers(&self, buf: &AudioBuffer) -> Result<Vec<f64>> {
        let block = self.block_len(buf.sample_rate);
        if block == 0 || buf.len() < block {
            return Err(Error::BufferTooShort { samples: buf.len(), block });
        }
        let sr = f64::from(buf.sample_rate);
        let y = k_highpass(sr).process(&k_shelf(sr).process(&buf.samples));
        let step = ((1.0 - self.overlap) * block as f64).round().max(1.0) as usize;
        let mut prefix = Vec::with_capacity(y.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in &y {
            acc += v * v;
            prefix.push(acc);
        }
        let count = (y.len() - block) / step + 1;
        Ok((0..count).map(|j| (prefix[j * step + block] - prefix[j * step]) / block as f64).collect())
    }

    pub fn integrated_loudness(&self, buf: &AudioBuffer) -> Result<Loudness> {
        let powers = self.block_powers(buf)?;
        let above_abs: Vec<f64> = powers.into_iter().filter(|&z| z > 0.0 && block_loudness(z) > self.absolute_gate).collect();
        if above_abs.is_empty() {
            return Ok(Loudness::Silence);
        }
        let threshold = block_loudness(above_abs.iter().sum::<f64>() / above_abs.len() as f64) + self.relative_gate;
        let gated: Vec<f64> = above_abs.into_iter().filter(|&z| block_loudness(z) > threshold).collect();
        Ok(Loudness::Lufs(block_loudness(gated.iter().sum::<f64>() / gated.len() as f64)))
    }
}

pub fn db_to_gain(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn gain_to_db(gain: f64) -> f64 {
    20.0 * gain.log10()
}

/// Scales a buffer to `target` LUFS; returns it with the applied gain in dB.
pub fn normalize_to_lufs(buf: &AudioBuffer, target: f64, meter: &LoudnessMeter) -> Result<(AudioBuffer, f64)> {
    let Loudness::Lufs(measured) = meter.integrated_loudness(buf)? else {
        return Err(Error::Silence);
    };
    let gain_db = target - measured;
    let mut out = buf.clone();
    out.scale(db_to_gain(gain_db));
    Ok((out, gain_db))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MasteringConfig {
    pub target_lufs: f64,
    /// Sample-peak ceiling of the mix in dBFS.
    pub peak_ceiling_dbfs: f64,
    pub meter: LoudnessMeter,
}

impl Default for MasteringConfig {
    fn default() -> Self {
        MasteringConfig { target_lufs: -13.0, peak_ceiling_dbfs: -1.0, meter: LoudnessMeter::default() }
    }
}

impl MasteringConfig {
    pub fn validate(&self) -> Result<()> {
        let m = &self.meter;
        if !(self.target_lufs < 0.0 && self.peak_ceiling_dbfs <= 0.0)
            || !(m.block_s > 0.0 && (0.0..1.0).contains(&m.overlap) && m.relative_gate < 0.0)
        {
            return Err(Error::InvalidConfig("mastering targets and meter settings out of range".into()));
        }
        Ok(())
    }
}

/// Normalization record of one stem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StemGain {
    /// Loudness before normalization; `None` when the stem is silent.
    pub measured_lufs: Option<f64>,
    pub gain_db: f64,
    /// Set when the stem could not be measured and kept unity gain.
    pub silent: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MixResult {
    pub mix: AudioBuffer,
    pub stems: Vec<AudioBuffer>,
    pub stem_gains: Vec<StemGain>,
    /// Uniform gain applied to the mix and all stems; `<= 0`.
    pub peak_guard_db: f64,
}

/// Sums stems; if the sum peaks above `ceiling_dbfs`, one gain is applied to
/// the mix and every stem so the mix peaks exactly at the ceiling.
pub fn mix_stems(stems: &[AudioBuffer], ceiling_dbfs: f64) -> Result<(AudioBuffer, Vec<AudioBuffer>, f64)> {
    let first = stems.first().ok_or(Error::LengthMismatch)?;
    if stems.iter().any(|s| s.len() != first.len() || s.sample_rate != first.sample_rate) {
        return Err(Error::LengthMismatch);
    }
    let mut mix = AudioBuffer::silence(first.len(), first.sample_rate);
    for s in stems {
        for (m, x) in mix.samples.iter_mut().zip(&s.samples) {
            *m += x;
        }
    }
    let mut stems = stems.to_vec();
    let peak = mix.peak();
    let ceiling = db_to_gain(ceiling_dbfs);
    let mut guard_db = 0.0;
    if peak > ceiling {
        let g = ceiling / peak;
        guard_db = gain_to_db(g);
        mix.scale(g);
        stems.iter_mut().for_each(|s| s.scale(g));
    }
    Ok((mix, stems, guard_db))
}

/// Normalizes every stem to the target loudness, then mixes with the peak
/// guard. Silent stems keep unity gain and are flagged.
pub fn master(stems: &[AudioBuffer], cfg: &MasteringConfig) -> Result<MixResult> {
    let mut normalized = Vec::with_capacity(stems.len());
    let mut stem_gains = Vec::with_capacity(stems.len());
    for s in stems {
        match cfg.meter.integrated_loudness(s)? {
            Loudness::Lufs(measured) => {
                let gain_db = cfg.target_lufs - measured;
                let mut out = s.clone();
                out.scale(db_to_gain(gain_db));
                normalized.push(out);
                stem_gains.push(StemGain { measured_lufs: Some(measured), gain_db, silent: false });
            }
            Loudness::Silence => {
                normalized.push(s.clone());
                stem_gains.push(StemGain { measured_lufs: None, gain_db: 0.0, silent: true });
            }
        }
    }
    let (mix, stems, peak_guard_db) = mix_stems(&normalized, cfg.peak_ceiling_dbfs)?;
    Ok(MixResult { mix, stems, stem_gains, peak_guard_db })
}
