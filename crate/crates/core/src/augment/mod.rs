//! MIDI-level augmentation: tempo, microtiming and orchestration.

mod ensemble;

pub use ensemble::{
    assign_orchestration, fit_register, register_shift, Ensemble, EnsembleSpec, Instrument, InstrumentRanges, Orchestration,
};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::{ScoreNote, Voice, STEPS_PER_BEAT};

/// Shortest duration a note may be trimmed to by overlap repair, seconds.
const MIN_NOTE_SECONDS: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TempoConfig {
    pub min_bpm: u32,
    pub max_bpm: u32,
}

impl Default for TempoConfig {
    fn default() -> Self {
        TempoConfig { min_bpm: 50, max_bpm: 150 }
    }
}

impl TempoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_bpm == 0 || self.min_bpm > self.max_bpm || self.max_bpm > 1000 {
            return Err(Error::InvalidConfig("tempo bounds must satisfy 1 <= min_bpm <= max_bpm <= 1000".into()));
        }
        Ok(())
    }
}

/// Uniform integer tempo in `[min_bpm, max_bpm]`.
pub fn sample_tempo<R: Rng + ?Sized>(cfg: &TempoConfig, rng: &mut R) -> u32 {
    rng.random_range(cfg.min_bpm..=cfg.max_bpm)
}

/// Normal timing offsets truncated to `[-bound, bound]`, in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MicrotimingConfig {
    pub mu: f64,
    pub sigma: f64,
    pub bound: f64,
}

impl Default for MicrotimingConfig {
    fn default() -> Self {
        MicrotimingConfig { mu: 0.0, sigma: 0.015, bound: 0.050 }
    }
}

impl MicrotimingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.bound > 0.0 && self.mu.abs() < self.bound) {
            return Err(Error::InvalidConfig("microtiming needs sigma > 0, bound > 0 and |mu| < bound".into()));
        }
        Ok(())
    }
}

/// Draws one offset by rejection from the parent normal.
pub fn sample_microtiming<R: Rng + ?Sized>(cfg: &MicrotimingConfig, rng: &mut R) -> f64 {
    let normal = Normal::new(cfg.mu, cfg.sigma).expect("validated sigma");
    loop {
        let x = normal.sample(rng);
        if x.abs() <= cfg.bound {
            return x;
        }
    }
}

/// Length of one sixteenth step at `bpm`.
pub fn step_seconds(bpm: u32) -> f64 {
    60.0 / f64::from(bpm) / STEPS_PER_BEAT as f64
}

/// A note with its performed timing and instrument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceNote {
    pub part: Voice,
    pub instrument: Instrument,
    pub pitch: u8,
    pub onset_s: f64,
    pub offset_s: f64,
    pub quantized_onset_step: u32,
    pub quantized_duration_steps: u32,
    /// Drawn microtiming offset. `onset_s` equals the quantized onset plus
    /// this value unless overlap repair or the track start clamped it.
    pub timing_offset_s: f64,
}

impl PerformanceNote {
    pub fn duration_s(&self) -> f64 {
        self.offset_s - self.onset_s
    }
}

/// Converts grid notes to seconds at `bpm` and adds a microtiming offset to
/// each note, shifting onset and offset together.
///
/// Within a part, a shifted note that would overlap its successor is trimmed
/// and the successor delayed so both meet at the midpoint of the conflict.
/// Onsets before zero are clamped to the track start. Output order matches
/// input order.
pub fn realize_timing<R: Rng + ?Sized>(
    notes: &[ScoreNote],
    bpm: u32,
    orchestration: &Orchestration,
    mt: &MicrotimingConfig,
    rng: &mut R,
) -> Result<Vec<PerformanceNote>> {
    if !(1..=1000).contains(&bpm) {
        return Err(Error::InvalidTempo(bpm));
    }
    let step = step_seconds(bpm);
    let mut out: Vec<PerformanceNote> = notes
        .iter()
        .map(|n| {
            let offset = sample_microtiming(mt, rng);
            PerformanceNote {
                part: n.voice,
                instrument: orchestration.instrument(n.voice),
                pitch: n.pitch,
                onset_s: f64::from(n.onset_step) * step + offset,
                offset_s: f64::from(n.end_step()) * step + offset,
                quantized_onset_step: n.onset_step,
                quantized_duration_steps: n.duration_steps,
                timing_offset_s: offset,
            }
        })
        .collect();

    for voice in Voice::ALL {
        let mut idx: Vec<usize> = (0..out.len()).filter(|&i| out[i].part == voice).collect();
        idx.sort_by_key(|&i| out[i].quantized_onset_step);
        if let Some(&first) = idx.first() {
            out[first].onset_s = out[first].onset_s.max(0.0);
        }
        for pair in idx.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if out[a].offset_s > out[b].onset_s {
                let meet = (0.5 * (out[a].offset_s + out[b].onset_s)).max(out[a].onset_s + MIN_NOTE_SECONDS);
                out[a].offset_s = meet;
                out[b].onset_s = out[b].onset_s.max(meet);
            }
            if out[b].offset_s < out[b].onset_s + MIN_NOTE_SECONDS {
                out[b].offset_s = out[b].onset_s + MIN_NOTE_SECONDS;
            }
        }
    }
    Ok(out)
}
