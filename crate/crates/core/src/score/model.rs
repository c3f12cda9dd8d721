use std::path::Path;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{Cell, Mask, PianoRoll, PitchRange, Voice, NUM_STEPS, NUM_VOICES, STEPS_PER_BEAT};
use crate::dataset::midi::Smf;
use crate::error::{Error, Result};

/// A conditional distribution over pitches for masked pianoroll cells.
///
/// Implementations return exactly one pitch per masked cell, in the order of
/// [`Mask::cells`], and must not depend on the current values of masked cells.
pub trait NoteModel: Sync {
    fn conditional_sample(&self, roll: &PianoRoll, mask: &Mask, rng: &mut dyn RngCore) -> Vec<u8>;
}

/// Point mass at a single pitch.
#[derive(Clone, Copy, Debug)]
pub struct ConstantModel(pub u8);

impl NoteModel for ConstantModel {
    fn conditional_sample(&self, _roll: &PianoRoll, mask: &Mask, _rng: &mut dyn RngCore) -> Vec<u8> {
        vec![self.0; mask.len()]
    }
}

/// Replays a pre-composed score; every masked cell is filled from it.
#[derive(Clone, Debug)]
pub struct ExternalScoreModel {
    score: PianoRoll,
}

impl ExternalScoreModel {
    pub fn new(score: PianoRoll) -> Self {
        ExternalScoreModel { score }
    }

    /// Loads a four-voice score from a Standard MIDI File.
    ///
    /// Voices are taken from the first four note-bearing tracks, or from MIDI
    /// channels 0-3 when the file has fewer tracks (format 0). Each sixteenth
    /// step takes the pitch sounding at its midpoint; rests hold the previous
    /// pitch since the grid has no rest symbol.
    pub fn from_midi_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let smf = Smf::parse(&bytes)?;
        let notes = smf.notes();
        let mut tracks: Vec<usize> = notes.iter().map(|n| n.track).collect();
        tracks.dedup();
        tracks.sort_unstable();
        tracks.dedup();
        let by_track = tracks.len() >= NUM_VOICES;

        let ticks_per_step = u64::from(smf.ppqn) / STEPS_PER_BEAT as u64;
        if ticks_per_step == 0 {
            return Err(Error::Midi("resolution too coarse for sixteenth steps".into()));
        }
        let mut rows = vec![[0u8; NUM_STEPS]; NUM_VOICES];
        for (v, row) in rows.iter_mut().enumerate() {
            let voice_notes: Vec<_> = notes
                .iter()
                .filter(|n| if by_track { n.track == tracks[v] } else { usize::from(n.channel) == v })
                .collect();
            let first = voice_notes
                .iter()
                .min_by_key(|n| n.start_tick)
                .ok_or_else(|| Error::Midi(format!("no notes for voice {}", Voice::ALL[v].name())))?;
            let mut held = first.pitch;
            for (step, cell) in row.iter_mut().enumerate() {
                let tick = step as u64 * ticks_per_step + ticks_per_step / 2;
                if let Some(n) = voice_notes.iter().rev().find(|n| n.start_tick <= tick && tick < n.end_tick) {
                    held = n.pitch;
                }
                *cell = held;
            }
        }
        Ok(ExternalScoreModel { score: PianoRoll::from_rows(&rows)? })
    }

    pub fn score(&self) -> &PianoRoll {
        &self.score
    }
}

impl NoteModel for ExternalScoreModel {
    fn conditional_sample(&self, _roll: &PianoRoll, mask: &Mask, _rng: &mut dyn RngCore) -> Vec<u8> {
        mask.cells().iter().map(|&c| self.score.get(c)).collect()
    }
}

/// Procedural stand-in for a learned chorale model.
///
/// Each masked cell is drawn in time-major order from a distribution over the
/// diatonic pitches of a fixed major key that combines
///
/// * a first-order melodic transition weight to the known neighbours in the
///   same voice, favouring held notes off the beat and stepwise motion;
/// * vertical consonance with the known pitches of the other voices;
/// * strict voice ordering (no crossing, no unisons);
/// * a Gaussian pull toward the centre of each voice's candidate range.
///
/// Candidate ranges are wider than the rejection table, but the tessitura
/// pull and voice ordering keep default samples inside it; rejection matters
/// for external models and tighter tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VoiceLeadingModel {
    /// Pitch class of the tonic, 0 = C.
    pub tonic: u8,
    pub soprano: PitchRange,
    pub alto: PitchRange,
    pub tenor: PitchRange,
    pub bass: PitchRange,
    /// Standard deviation of the tessitura pull, semitones.
    pub tessitura_spread: f64,
    /// Relative weight of holding the previous pitch when the step starts a beat.
    pub hold_on_beat: f64,
    /// Relative weight of holding the previous pitch inside a beat.
    pub hold_off_beat: f64,
    /// Weight applied per dissonant interval against another voice.
    pub dissonance: f64,
}

impl Default for VoiceLeadingModel {
    fn default() -> Self {
        VoiceLeadingModel {
            tonic: 0,
            soprano: PitchRange::new(55, 86),
            alto: PitchRange::new(48, 79),
            tenor: PitchRange::new(43, 74),
            bass: PitchRange::new(31, 69),
            tessitura_spread: 4.0,
            hold_on_beat: 1.5,
            hold_off_beat: 12.0,
            dissonance: 0.1,
        }
    }
}

const MAJOR_SCALE: [u8; 7] = [0, 2, 4, 5, 7, 9, 11];

impl VoiceLeadingModel {
    fn range(&self, voice: usize) -> PitchRange {
        [self.soprano, self.alto, self.tenor, self.bass][voice]
    }

    pub fn validate(&self) -> Result<()> {
        if self.tonic >= 12 {
            return Err(Error::InvalidConfig("tonic must be a pitch class in 0..12".into()));
        }
        for v in 0..NUM_VOICES {
            let r = self.range(v);
            if r.min >= r.max || r.max > 127 {
                return Err(Error::InvalidConfig("model voice ranges must satisfy min < max <= 127".into()));
            }
        }
        let positive = [self.tessitura_spread, self.hold_on_beat, self.hold_off_beat, self.dissonance];
        if positive.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidConfig("model weights must be positive".into()));
        }
        Ok(())
    }

    fn candidates(&self, voice: usize) -> Vec<u8> {
        let r = self.range(voice);
        (r.min..=r.max)
            .filter(|p| MAJOR_SCALE.contains(&((p + 12 - self.tonic) % 12)))
            .collect()
    }

    fn melodic(&self, interval: u8, change_step: usize) -> f64 {
        match interval {
            0 if change_step % STEPS_PER_BEAT == 0 => self.hold_on_beat,
            0 => self.hold_off_beat,
            1 | 2 => 1.0,
            3 | 4 => 0.6,
            5 | 7 => 0.3,
            8 | 9 | 12 => 0.1,
            6 => 0.05,
            _ => 0.02,
        }
    }

    fn vertical(&self, interval: u8) -> f64 {
        match interval % 12 {
            0 | 3 | 4 | 7 | 8 | 9 => 1.0,
            5 => 0.5,
            _ => self.dissonance,
        }
    }
}

impl NoteModel for VoiceLeadingModel {
    fn conditional_sample(&self, roll: &PianoRoll, mask: &Mask, rng: &mut dyn RngCore) -> Vec<u8> {
        let mut state = roll.clone();
        let mut known = [[true; NUM_STEPS]; NUM_VOICES];
        for c in mask.cells() {
            known[c.voice][c.step] = false;
        }
        let candidates: Vec<Vec<u8>> = (0..NUM_VOICES).map(|v| self.candidates(v)).collect();
        let mut weights = Vec::with_capacity(32);
        let mut out = Vec::with_capacity(mask.len());

        for &Cell { voice, step } in mask.cells() {
            let pool = &candidates[voice];
            let range = self.range(voice);
            let centre = (f64::from(range.min) + f64::from(range.max)) / 2.0;
            let prev = (step > 0 && known[voice][step - 1]).then(|| state.get(Cell::new(voice, step - 1)));
            let next = (step + 1 < NUM_STEPS && known[voice][step + 1]).then(|| state.get(Cell::new(voice, step + 1)));
            let others: Vec<(usize, u8)> = (0..NUM_VOICES)
                .filter(|&u| u != voice && known[u][step])
                .map(|u| (u, state.get(Cell::new(u, step))))
                .collect();

            weights.clear();
            let mut total = 0.0;
            for &p in pool {
                let z = (f64::from(p) - centre) / self.tessitura_spread;
                let mut w = (-0.5 * z * z).exp();
                if let Some(q) = prev {
                    w *= self.melodic(p.abs_diff(q), step);
                }
                if let Some(q) = next {
                    w *= self.melodic(p.abs_diff(q), step + 1);
                }
                for &(u, q) in &others {
                    let ordered = if u < voice { p < q } else { p > q };
                    if !ordered {
                        w = 0.0;
                        break;
                    }
                    w *= self.vertical(p.abs_diff(q));
                }
                weights.push(w);
                total += w;
            }
            if total <= 0.0 {
                // Constraints are unsatisfiable from here; drop the vertical terms.
                weights.clear();
                total = 0.0;
                for &p in pool {
                    let z = (f64::from(p) - centre) / self.tessitura_spread;
                    let mut w = (-0.5 * z * z).exp();
                    if let Some(q) = prev {
                        w *= self.melodic(p.abs_diff(q), step);
                    }
                    weights.push(w);
                    total += w;
                }
            }

            let mut target = rng.random::<f64>() * total;
            let mut chosen = pool[pool.len() - 1];
            for (&p, &w) in pool.iter().zip(&weights) {
                if target < w {
                    chosen = p;
                    break;
                }
                target -= w;
            }
            state.set(Cell::new(voice, step), chosen);
            known[voice][step] = true;
            out.push(chosen);
        }
        out
    }
}
