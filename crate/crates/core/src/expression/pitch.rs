use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs to note-level pitch correction, all in semitones.
#[derive(Clone, Debug, PartialEq)]
pub struct PitchCorrectionInputs {
    pub f0_note: u8,
    pub f0_delta: Vec<f64>,
    pub f0_delta_mean: f64,
    pub alpha: f64,
}

impl PitchCorrectionInputs {
    pub fn new(f0_note: u8, f0_delta: Vec<f64>, alpha: f64) -> Result<Self> {
        if f0_delta.is_empty() {
            return Err(Error::EmptyFrameSpan);
        }
        let f0_delta_mean = f0_delta.iter().sum::<f64>() / f0_delta.len() as f64;
        let inp = PitchCorrectionInputs { f0_note, f0_delta, f0_delta_mean, alpha };
        inp.validate()?;
        Ok(inp)
    }

    /// Splits a framewise f0 track into the note pitch and its deviation.
    pub fn from_f0(f0_note: u8, f0: &[f64], alpha: f64) -> Result<Self> {
        let note = f64::from(f0_note);
        Self::new(f0_note, f0.iter().map(|f| f - note).collect(), alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f0_delta.is_empty() {
            return Err(Error::EmptyFrameSpan);
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig(format!("alpha {} is outside [0, 1]", self.alpha)));
        }
        Ok(())
    }
}

/// Removes the fraction `alpha` of a note's mean deviation, keeping its
/// framewise shape: `f0_note + delta - alpha * mean(delta)`.
pub fn apply_pitch_correction(inp: &PitchCorrectionInputs) -> Result<Vec<f64>> {
    inp.validate()?;
    let base = f64::from(inp.f0_note);
    let shift = inp.alpha * inp.f0_delta_mean;
    Ok(inp.f0_delta.iter().map(|d| base + d - shift).collect())
}

/// How the correction strength is chosen per note.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AlphaMode {
    /// Uniform on `[0, 1]`, drawn once per note.
    #[default]
    Sampled,
    Fixed { alpha: f64 },
}

impl AlphaMode {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            AlphaMode::Sampled => rng.random::<f64>(),
            AlphaMode::Fixed { alpha } => alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            AlphaMode::Fixed { alpha } if !(0.0..=1.0).contains(&alpha) => {
                Err(Error::InvalidConfig(format!("fixed alpha {alpha} is outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

/// Natural intonation drift added to each note before correction.
///
/// A per-note offset follows a skew-normal law (positive skew leans sharp);
/// on top of it a stationary Gauss-Markov walk with standard deviation
/// `walk_std` and correlation time `walk_time_s` wanders across frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntonationConfig {
    pub bias_location: f64,
    pub bias_scale: f64,
    pub bias_skew: f64,
    pub walk_std: f64,
    pub walk_time_s: f64,
}

impl Default for IntonationConfig {
    fn default() -> Self {
        IntonationConfig { bias_location: 0.0, bias_scale: 0.15, bias_skew: 4.0, walk_std: 0.1, walk_time_s: 0.5 }
    }
}

impl IntonationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bias_scale >= 0.0 && self.walk_std >= 0.0 && self.walk_time_s > 0.0 && self.bias_skew.is_finite()) {
            return Err(Error::InvalidConfig("intonation needs nonnegative scales and positive walk time".into()));
        }
        Ok(())
    }
}

fn skew_normal<R: Rng + ?Sized>(skew: f64, rng: &mut R) -> f64 {
    let delta = skew / (1.0 + skew * skew).sqrt();
    let u: f64 = StandardNormal.sample(rng);
    let v: f64 = StandardNormal.sample(rng);
    delta * u.abs() + (1.0 - delta * delta).sqrt() * v
}

/// Framewise intonation deviation in semitones for one note.
pub fn sample_intonation<R: Rng + ?Sized>(frames: usize, frame_rate: f64, cfg: &IntonationConfig, rng: &mut R) -> Vec<f64> {
    let bias = cfg.bias_location + cfg.bias_scale * skew_normal(cfg.bias_skew, rng);
    let rho = (-1.0 / (cfg.walk_time_s * frame_rate)).exp();
    let innovation = Normal::new(0.0, cfg.walk_std * (1.0 - rho * rho).sqrt()).expect("validated std");
    let z: f64 = StandardNormal.sample(rng);
    let mut walk = cfg.walk_std * z;
    (0..frames)
        .map(|i| {
            if i > 0 {
                walk = rho * walk + innovation.sample(rng);
            }
            bias + walk
        })
        .collect()
}
