//! Blocked Gibbs sampling over a pianoroll.
//!
//! The sampler starts from the model's completion of an entirely masked roll
//! and then runs `num_steps` rewrite steps. At step `i` a random block of
//! `fraction(i) * 512` cells is masked and redrawn from the model conditioned
//! on everything else.

use rand::seq::index;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_ranges, Cell, NoteModel, PianoRoll, PitchRangeTable, NUM_CELLS, NUM_STEPS};
use crate::error::{Error, Result};
use crate::rng::derive_indexed;

/// Fraction of cells resampled at each step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskSchedule {
    /// Linear interpolation from `start` at the first step to `end` at the last.
    Linear { start: f64, end: f64 },
    Constant { fraction: f64 },
}

impl Default for MaskSchedule {
    fn default() -> Self {
        MaskSchedule::Linear { start: 1.0, end: 1.0 / NUM_STEPS as f64 }
    }
}

impl MaskSchedule {
    pub fn fraction(&self, step: usize, num_steps: usize) -> f64 {
        match *self {
            MaskSchedule::Constant { fraction } => fraction,
            MaskSchedule::Linear { start, end } => {
                if num_steps <= 1 {
                    start
                } else {
                    start + (end - start) * step as f64 / (num_steps - 1) as f64
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |f: f64| f > 0.0 && f <= 1.0;
        let valid = match *self {
            MaskSchedule::Constant { fraction } => ok(fraction),
            MaskSchedule::Linear { start, end } => ok(start) && ok(end),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidConfig("mask fractions must lie in (0, 1]".into()))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsConfig {
    pub num_steps: usize,
    pub schedule: MaskSchedule,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig { num_steps: 1024, schedule: MaskSchedule::default(), seed: 0 }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_steps == 0 {
            return Err(Error::InvalidConfig("gibbs num_steps must be at least 1".into()));
        }
        self.schedule.validate()
    }
}

/// A sorted, duplicate-free set of in-bounds cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask(Vec<Cell>);

impl Mask {
    pub fn new(cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let mut cells: Vec<Cell> = cells.into_iter().collect();
        if let Some(bad) = cells.iter().find(|c| !c.in_bounds()) {
            return Err(Error::CellOutOfBounds { voice: bad.voice, step: bad.step });
        }
        // Time-major order lets models sweep the score left to right.
        cells.sort_by_key(|c| (c.step, c.voice));
        cells.dedup();
        Ok(Mask(cells))
    }

    pub fn all() -> Self {
        Mask::new(PianoRoll::cells()).expect("grid cells are in bounds")
    }

    pub fn cells(&self) -> &[Cell] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.0.binary_search_by_key(&(cell.step, cell.voice), |c| (c.step, c.voice)).is_ok()
    }
}

/// Draws a uniformly random block covering `fraction` of the grid (at least one cell).
pub fn draw_mask(fraction: f64, rng: &mut dyn RngCore) -> Mask {
    let count = ((fraction * NUM_CELLS as f64).round() as usize).clamp(1, NUM_CELLS);
    let cells = index::sample(rng, NUM_CELLS, count)
        .into_iter()
        .map(|i| Cell::new(i / NUM_STEPS, i % NUM_STEPS));
    Mask::new(cells).expect("sampled cells are in bounds")
}

/// Replaces the masked cells with the model's conditional sample.
pub fn gibbs_step(roll: &PianoRoll, mask: &Mask, model: &dyn NoteModel, rng: &mut dyn RngCore) -> Result<PianoRoll> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let pitches = model.conditional_sample(roll, mask, rng);
    if pitches.len() != mask.len() {
        return Err(Error::ContractViolation(format!(
            "expected {} pitches for the masked cells, got {}",
            mask.len(),
            pitches.len()
        )));
    }
    let mut next = roll.clone();
    for (&cell, &pitch) in mask.cells().iter().zip(&pitches) {
        if pitch > 127 {
            return Err(Error::ContractViolation(format!("pitch {pitch} is not a MIDI pitch")));
        }
        next.set(cell, pitch);
    }
    Ok(next)
}

/// Samples one chorale. Deterministic in `(model, config.seed)`.
pub fn sample_chorale(model: &dyn NoteModel, config: &GibbsConfig) -> Result<PianoRoll> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut roll = gibbs_step(&PianoRoll::filled(60), &Mask::all(), model, &mut rng)?;
    for step in 0..config.num_steps {
        let mask = draw_mask(config.schedule.fraction(step, config.num_steps), &mut rng);
        roll = gibbs_step(&roll, &mask, model, &mut rng)?;
    }
    Ok(roll)
}

/// Samples until a chorale passes [`check_ranges`], drawing a fresh seed per
/// attempt. Returns the roll and the number of attempts used.
pub fn sample_valid_chorale(
    model: &dyn NoteModel,
    config: &GibbsConfig,
    table: &PitchRangeTable,
    max_attempts: u32,
) -> Result<(PianoRoll, u32)> {
    for attempt in 0..max_attempts {
        let attempt_config = GibbsConfig { seed: derive_indexed(config.seed, "attempt", u64::from(attempt)), ..config.clone() };
        let roll = sample_chorale(model, &attempt_config)?;
        if check_ranges(&roll, table).accepted() {
            return Ok((roll, attempt + 1));
        }
    }
    Err(Error::RetriesExhausted { attempts: max_attempts })
}
