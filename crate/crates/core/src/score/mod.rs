//! Four-part chorale scores.
//!
//! A [`PianoRoll`] is a fixed 4 × 128 grid: eight 4/4 measures at sixteenth
//! resolution, one row per SATB voice. Cells hold MIDI pitches directly; there
//! is no rest symbol, so every voice sounds for the whole piece.

mod gibbs;
mod model;

pub use gibbs::{draw_mask, gibbs_step, sample_chorale, sample_valid_chorale, GibbsConfig, Mask, MaskSchedule};
pub use model::{ConstantModel, ExternalScoreModel, NoteModel, VoiceLeadingModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_VOICES: usize = 4;
pub const NUM_STEPS: usize = 128;
pub const STEPS_PER_MEASURE: usize = 16;
pub const STEPS_PER_BEAT: usize = 4;
pub const NUM_CELLS: usize = NUM_VOICES * NUM_STEPS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Voice {
    Soprano,
    Alto,
    Tenor,
    Bass,
}

impl Voice {
    pub const ALL: [Voice; NUM_VOICES] = [Voice::Soprano, Voice::Alto, Voice::Tenor, Voice::Bass];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Voice> {
        Voice::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Voice::Soprano => "soprano",
            Voice::Alto => "alto",
            Voice::Tenor => "tenor",
            Voice::Bass => "bass",
        }
    }
}

/// One grid position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    pub voice: usize,
    pub step: usize,
}

impl Cell {
    pub fn new(voice: usize, step: usize) -> Self {
        Cell { voice, step }
    }

    pub fn in_bounds(self) -> bool {
        self.voice < NUM_VOICES && self.step < NUM_STEPS
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PianoRoll {
    grid: [[u8; NUM_STEPS]; NUM_VOICES],
}

impl PianoRoll {
    pub fn filled(pitch: u8) -> Self {
        assert!(pitch <= 127, "MIDI pitch out of range");
        PianoRoll { grid: [[pitch; NUM_STEPS]; NUM_VOICES] }
    }

    /// Builds a roll from four rows of 128 pitches each, SATB order.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        if rows.len() != NUM_VOICES {
            return Err(Error::InvalidConfig(format!("pianoroll needs {NUM_VOICES} voices, got {}", rows.len())));
        }
        let mut grid = [[0u8; NUM_STEPS]; NUM_VOICES];
        for (v, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != NUM_STEPS {
                return Err(Error::InvalidConfig(format!("voice {v} has {} steps, expected {NUM_STEPS}", row.len())));
            }
            if let Some(&p) = row.iter().find(|&&p| p > 127) {
                return Err(Error::InvalidConfig(format!("pitch {p} is not a MIDI pitch")));
            }
            grid[v].copy_from_slice(row);
        }
        Ok(PianoRoll { grid })
    }

    pub fn get(&self, cell: Cell) -> u8 {
        self.grid[cell.voice][cell.step]
    }

    pub(crate) fn set(&mut self, cell: Cell, pitch: u8) {
        debug_assert!(pitch <= 127);
        self.grid[cell.voice][cell.step] = pitch;
    }

    pub fn voice(&self, voice: Voice) -> &[u8; NUM_STEPS] {
        &self.grid[voice.index()]
    }

    pub fn rows(&self) -> &[[u8; NUM_STEPS]; NUM_VOICES] {
        &self.grid
    }

    pub fn cells() -> impl Iterator<Item = Cell> {
        (0..NUM_VOICES).flat_map(|v| (0..NUM_STEPS).map(move |s| Cell::new(v, s)))
    }
}

impl std::fmt::Debug for PianoRoll {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut list = f.debug_list();
        for row in &self.grid {
            list.entry(&&row[..]);
        }
        list.finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PitchRange {
    pub min: u8,
    pub max: u8,
}

impl PitchRange {
    pub const fn new(min: u8, max: u8) -> Self {
        PitchRange { min, max }
    }

    pub fn contains(self, pitch: u8) -> bool {
        (self.min..=self.max).contains(&pitch)
    }
}

/// Per-voice tessituras used to reject implausible samples.
///
/// A pitch is accepted when it lies within `[min - margin, max + margin]`;
/// both bounds are inclusive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PitchRangeTable {
    pub soprano: PitchRange,
    pub alto: PitchRange,
    pub tenor: PitchRange,
    pub bass: PitchRange,
    pub margin: u8,
}

impl Default for PitchRangeTable {
    fn default() -> Self {
        PitchRangeTable {
            soprano: PitchRange::new(60, 81),
            alto: PitchRange::new(53, 74),
            tenor: PitchRange::new(48, 69),
            bass: PitchRange::new(36, 64),
            margin: 3,
        }
    }
}

impl PitchRangeTable {
    pub fn range(&self, voice: Voice) -> PitchRange {
        match voice {
            Voice::Soprano => self.soprano,
            Voice::Alto => self.alto,
            Voice::Tenor => self.tenor,
            Voice::Bass => self.bass,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for voice in Voice::ALL {
            let r = self.range(voice);
            if r.min >= r.max || r.max > 127 {
                return Err(Error::InvalidConfig(format!("pitch range for {} must satisfy min < max <= 127", voice.name())));
            }
        }
        Ok(())
    }

    /// Inclusive accepted interval for a voice once the margin is applied.
    pub fn accepted_interval(&self, voice: Voice) -> (i32, i32) {
        let r = self.range(voice);
        (i32::from(r.min) - i32::from(self.margin), i32::from(r.max) + i32::from(self.margin))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RangeViolation {
    pub voice: Voice,
    pub step: usize,
    pub pitch: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangeCheck {
    pub violations: Vec<RangeViolation>,
}

impl RangeCheck {
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_ranges(roll: &PianoRoll, table: &PitchRangeTable) -> RangeCheck {
    let mut violations = Vec::new();
    for voice in Voice::ALL {
        let (lo, hi) = table.accepted_interval(voice);
        for (step, &pitch) in roll.voice(voice).iter().enumerate() {
            if !(lo..=hi).contains(&i32::from(pitch)) {
                violations.push(RangeViolation { voice, step, pitch });
            }
        }
    }
    RangeCheck { violations }
}

/// A note on the sixteenth grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreNote {
    pub voice: Voice,
    pub pitch: u8,
    pub onset_step: u32,
    pub duration_steps: u32,
}

impl ScoreNote {
    pub fn end_step(&self) -> u32 {
        self.onset_step + self.duration_steps
    }
}

/// Merges runs of equal pitch into notes. Notes come out grouped by voice in
/// SATB order, each voice in time order, and tile `[0, 128)` exactly.
pub fn pianoroll_to_notes(roll: &PianoRoll) -> Vec<ScoreNote> {
    let mut notes = Vec::new();
    for voice in Voice::ALL {
        let row = roll.voice(voice);
        let mut onset = 0usize;
        for step in 1..=NUM_STEPS {
            if step == NUM_STEPS || row[step] != row[onset] {
                notes.push(ScoreNote {
                    voice,
                    pitch: row[onset],
                    onset_step: onset as u32,
                    duration_steps: (step - onset) as u32,
                });
                onset = step;
            }
        }
    }
    notes
}

/// Rasterizes notes back onto the grid. Every cell must be covered exactly once.
pub fn notes_to_pianoroll(notes: &[ScoreNote]) -> Result<PianoRoll> {
    let mut grid = [[0u8; NUM_STEPS]; NUM_VOICES];
    let mut covered = [[false; NUM_STEPS]; NUM_VOICES];
    for note in notes {
        let v = note.voice.index();
        for step in note.onset_step..note.end_step() {
            let step = step as usize;
            if step >= NUM_STEPS || covered[v][step] {
                return Err(Error::InvalidConfig(format!("note {note:?} overlaps or leaves the grid")));
            }
            covered[v][step] = true;
            grid[v][step] = note.pitch;
        }
    }
    if covered.iter().flatten().any(|c| !c) {
        return Err(Error::InvalidConfig("notes leave grid cells uncovered".into()));
    }
    PianoRoll::from_rows(&grid)
}
