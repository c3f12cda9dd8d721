//! Harmonic-plus-filtered-noise synthesis from framewise parameters.

mod noise;

pub use noise::{synthesize_noise, NoiseSource};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expression::SynthesisParams;

/// Mono floating-point audio.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        AudioBuffer { samples, sample_rate }
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        AudioBuffer { samples: vec![0.0; len], sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn scale(&mut self, gain: f64) {
        self.samples.iter_mut().for_each(|x| *x *= gain);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub sample_rate: u32,
    /// Length of the per-frame noise-shaping FIR; odd for linear phase.
    pub fir_taps: usize,
    pub fft_size: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { sample_rate: 16_000, fir_taps: 257, fft_size: 512 }
    }
}

impl SynthConfig {
    /// Samples per frame; errors unless the frame rate divides the sample rate.
    pub fn hop(&self, frame_rate: f64) -> Result<usize> {
        if !(frame_rate > 0.0) {
            return Err(Error::NonPositiveFrameRate(frame_rate));
        }
        let hop = f64::from(self.sample_rate) / frame_rate;
        if (hop - hop.round()).abs() > 1e-9 || hop.round() < 1.0 {
            return Err(Error::NonIntegerHop { sample_rate: self.sample_rate, frame_rate });
        }
        Ok(hop.round() as usize)
    }

    pub fn validate(&self, frame_rate: f64) -> Result<()> {
        let hop = self.hop(frame_rate)?;
        if self.fir_taps % 2 == 0 || !self.fft_size.is_power_of_two() || self.fft_size < self.fir_taps + 2 * hop - 1 {
            return Err(Error::InvalidConfig(
                "noise filter needs odd fir_taps and a power-of-two fft_size >= fir_taps + 2*hop - 1".into(),
            ));
        }
        Ok(())
    }
}

pub fn midi_to_hz(m: f64) -> f64 {
    440.0 * 2f64.powf((m - 69.0) / 12.0)
}

/// Per-sample oscillator controls; harmonic weights stay framewise.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleControls {
    pub f0_hz: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub hop: usize,
}

/// Linear interpolation of f0 (in Hz) and amplitude from frame starts to
/// every sample; the last frame is held.
pub fn upsample_params(p: &SynthesisParams, sample_rate: u32) -> Result<SampleControls> {
    let cfg = SynthConfig { sample_rate, ..Default::default() };
    let hop = cfg.hop(p.layout.frame_rate)?;
    let hz: Vec<f64> = p.f0.iter().map(|&m| midi_to_hz(m)).collect();
    Ok(SampleControls { f0_hz: interpolate(&hz, hop), amplitude: interpolate(&p.amplitude, hop), hop })
}

fn interpolate(frames: &[f64], hop: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(frames.len() * hop);
    for (i, &a) in frames.iter().enumerate() {
        let b = frames.get(i + 1).copied().unwrap_or(a);
        let step = (b - a) / hop as f64;
        out.extend((0..hop).map(|j| a + step * j as f64));
    }
    out
}

/// Additive synthesis with cumulative phase.
///
/// Harmonics at or above Nyquist are dropped sample by sample and the
/// surviving weights renormalized to sum to 1.
pub fn synthesize_harmonic(
    controls: &SampleControls,
    harmonics: &[f64],
    num_harmonics: usize,
    sample_rate: u32,
) -> Result<AudioBuffer> {
    let n = controls.f0_hz.len();
    if controls.amplitude.len() != n || harmonics.len() * controls.hop != n * num_harmonics {
        return Err(Error::LengthMismatch);
    }
    if let Some(f) = controls.f0_hz.iter().find(|f| !(**f >= 0.0)) {
        return Err(Error::NegativeF0(*f));
    }
    let sr = f64::from(sample_rate);
    let nyquist = sr / 2.0;
    let mut prefix = vec![0.0; num_harmonics + 1];
    let mut out = vec![0.0; n];
    let mut phase = 0.0f64;
    let mut frame = usize::MAX;
    for (i, y) in out.iter_mut().enumerate() {
        let f0 = controls.f0_hz[i];
        phase = (phase + 2.0 * PI * f0 / sr) % (2.0 * PI);
        let amp = controls.amplitude[i];
        if amp == 0.0 || f0 == 0.0 {
            continue;
        }
        if i / controls.hop != frame {
            frame = i / controls.hop;
            let row = &harmonics[frame * num_harmonics..(frame + 1) * num_harmonics];
            for k in 0..num_harmonics {
                prefix[k + 1] = prefix[k] + row[k];
            }
        }
        // Harmonic k survives when k·f0 < nyquist.
        let kmax = (((nyquist / f0).ceil() as usize).saturating_sub(1)).min(num_harmonics);
        let total = prefix[kmax];
        if kmax == 0 || total <= 0.0 {
            continue;
        }
        let row = &harmonics[frame * num_harmonics..frame * num_harmonics + kmax];
        let (s1, c1) = phase.sin_cos();
        let two_c = 2.0 * c1;
        let (mut prev, mut cur) = (0.0, s1);
        let mut acc = 0.0;
        for &w in row {
            acc += w * cur;
            let next = two_c * cur - prev;
            prev = cur;
            cur = next;
        }
        *y = amp * acc / total;
    }
    Ok(AudioBuffer::new(out, sample_rate))
}

/// Renders one stem: harmonic and noise components summed sample-wise.
pub fn synthesize_stem(p: &SynthesisParams, cfg: &SynthConfig, noise: &NoiseSource) -> Result<AudioBuffer> {
    p.validate()?;
    cfg.validate(p.layout.frame_rate)?;
    let controls = upsample_params(p, cfg.sample_rate)?;
    let mut out = synthesize_harmonic(&controls, &p.harmonics, p.layout.num_harmonics, cfg.sample_rate)?;
    let n = synthesize_noise(&p.noise, p.layout.num_noise_bands, controls.hop, cfg, noise)?;
    for (y, x) in out.samples.iter_mut().zip(&n.samples) {
        *y += x;
    }
    Ok(out)
}
