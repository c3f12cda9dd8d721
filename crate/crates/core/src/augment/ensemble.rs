use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::score::{PitchRange, ScoreNote, Voice, NUM_VOICES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Instrument {
    Violin,
    Viola,
    Cello,
    DoubleBass,
    Flute,
    Oboe,
    Clarinet,
    Saxophone,
    Bassoon,
    Trumpet,
    FrenchHorn,
    Trombone,
    Tuba,
}

impl Instrument {
    pub const ALL: [Instrument; 13] = [
        Instrument::Violin,
        Instrument::Viola,
        Instrument::Cello,
        Instrument::DoubleBass,
        Instrument::Flute,
        Instrument::Oboe,
        Instrument::Clarinet,
        Instrument::Saxophone,
        Instrument::Bassoon,
        Instrument::Trumpet,
        Instrument::FrenchHorn,
        Instrument::Trombone,
        Instrument::Tuba,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Instrument::Violin => "violin",
            Instrument::Viola => "viola",
            Instrument::Cello => "cello",
            Instrument::DoubleBass => "double_bass",
            Instrument::Flute => "flute",
            Instrument::Oboe => "oboe",
            Instrument::Clarinet => "clarinet",
            Instrument::Saxophone => "saxophone",
            Instrument::Bassoon => "bassoon",
            Instrument::Trumpet => "trumpet",
            Instrument::FrenchHorn => "french_horn",
            Instrument::Trombone => "trombone",
            Instrument::Tuba => "tuba",
        }
    }

    /// General MIDI program number (zero-based).
    pub fn gm_program(self) -> u8 {
        match self {
            Instrument::Violin => 40,
            Instrument::Viola => 41,
            Instrument::Cello => 42,
            Instrument::DoubleBass => 43,
            Instrument::Trumpet => 56,
            Instrument::Trombone => 57,
            Instrument::Tuba => 58,
            Instrument::FrenchHorn => 60,
            Instrument::Saxophone => 65,
            Instrument::Oboe => 68,
            Instrument::Bassoon => 70,
            Instrument::Clarinet => 71,
            Instrument::Flute => 73,
        }
    }

    /// Approximate concert-pitch playable range.
    pub fn default_range(self) -> PitchRange {
        match self {
            Instrument::Violin => PitchRange::new(55, 100),
            Instrument::Viola => PitchRange::new(48, 88),
            Instrument::Cello => PitchRange::new(36, 76),
            Instrument::DoubleBass => PitchRange::new(28, 67),
            Instrument::Flute => PitchRange::new(60, 96),
            Instrument::Oboe => PitchRange::new(58, 91),
            Instrument::Clarinet => PitchRange::new(50, 91),
            Instrument::Saxophone => PitchRange::new(49, 81),
            Instrument::Bassoon => PitchRange::new(34, 75),
            Instrument::Trumpet => PitchRange::new(52, 84),
            Instrument::FrenchHorn => PitchRange::new(34, 77),
            Instrument::Trombone => PitchRange::new(40, 72),
            Instrument::Tuba => PitchRange::new(28, 65),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ensemble {
    String,
    Brass,
    Woodwind,
    Random,
}

impl Ensemble {
    pub const ALL: [Ensemble; 4] = [Ensemble::String, Ensemble::Brass, Ensemble::Woodwind, Ensemble::Random];

    pub fn name(self) -> &'static str {
        match self {
            Ensemble::String => "string",
            Ensemble::Brass => "brass",
            Ensemble::Woodwind => "woodwind",
            Ensemble::Random => "random",
        }
    }

    pub fn parse(name: &str) -> Option<Ensemble> {
        Ensemble::ALL.into_iter().find(|e| e.name().eq_ignore_ascii_case(name))
    }

    pub fn spec(self) -> EnsembleSpec {
        use Instrument::*;
        let pools: [Vec<Instrument>; NUM_VOICES] = match self {
            Ensemble::String => [vec![Violin], vec![Violin], vec![Viola], vec![Cello]],
            Ensemble::Brass => [vec![Trumpet], vec![FrenchHorn], vec![Trombone], vec![Tuba]],
            Ensemble::Woodwind => [vec![Flute], vec![Oboe], vec![Clarinet], vec![Bassoon]],
            Ensemble::Random => [
                vec![Violin, Flute, Trumpet, Clarinet, Oboe],
                vec![Violin, Viola, Flute, Clarinet, Oboe, Saxophone, Trumpet, FrenchHorn],
                vec![Viola, Cello, Clarinet, Saxophone, Trombone, FrenchHorn],
                vec![Cello, DoubleBass, Bassoon, Tuba],
            ],
        };
        EnsembleSpec { ensemble: self, pools }
    }
}

/// Instrument pools per SATB part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub ensemble: Ensemble,
    pub pools: [Vec<Instrument>; NUM_VOICES],
}

/// The instrument playing each SATB part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Orchestration(pub [Instrument; NUM_VOICES]);

impl Orchestration {
    pub fn instrument(&self, voice: Voice) -> Instrument {
        self.0[voice.index()]
    }

    /// Stem labels; an instrument used by several parts is numbered, e.g.
    /// `violin_1` and `violin_2`.
    pub fn labels(&self) -> [String; NUM_VOICES] {
        std::array::from_fn(|i| {
            let inst = self.0[i];
            let count = self.0.iter().filter(|&&x| x == inst).count();
            if count > 1 {
                let ordinal = self.0[..=i].iter().filter(|&&x| x == inst).count();
                format!("{}_{ordinal}", inst.name())
            } else {
                inst.name().to_string()
            }
        })
    }
}

/// Picks one instrument per part, uniformly from that part's pool.
pub fn assign_orchestration<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<Orchestration> {
    let mut chosen = [Instrument::Violin; NUM_VOICES];
    for (i, pool) in spec.pools.iter().enumerate() {
        chosen[i] = match pool.len() {
            0 => return Err(Error::EmptyPool(Voice::ALL[i])),
            1 => pool[0],
            n => pool[rng.random_range(0..n)],
        };
    }
    Ok(Orchestration(chosen))
}

/// Playable range per instrument, used for octave fitting.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InstrumentRanges(pub BTreeMap<Instrument, PitchRange>);

impl Default for InstrumentRanges {
    fn default() -> Self {
        InstrumentRanges(Instrument::ALL.iter().map(|&i| (i, i.default_range())).collect())
    }
}

impl InstrumentRanges {
    pub fn range(&self, instrument: Instrument) -> PitchRange {
        self.0.get(&instrument).copied().unwrap_or_else(|| instrument.default_range())
    }

    pub fn validate(&self) -> Result<()> {
        for (inst, r) in &self.0 {
            if r.min >= r.max || r.max > 127 {
                return Err(Error::InvalidConfig(format!("playable range for {} must satisfy min < max <= 127", inst.name())));
            }
        }
        Ok(())
    }
}

/// Octave transposition (multiple of 12 semitones) that puts the most
/// pitches inside `range`. Ties prefer the smallest shift, then downward.
pub fn register_shift(pitches: &[u8], range: PitchRange) -> i32 {
    let fits = |shift: i32| {
        pitches
            .iter()
            .filter(|&&p| {
                let q = i32::from(p) + shift;
                q >= i32::from(range.min) && q <= i32::from(range.max)
            })
            .count()
    };
    [0, -12, 12, -24, 24, -36, 36]
        .into_iter()
        .filter(|s| pitches.iter().all(|&p| (0..=127).contains(&(i32::from(p) + s))))
        .fold((0, None), |best: (i32, Option<usize>), s| match best.1 {
            Some(f) if f >= fits(s) => best,
            _ => (s, Some(fits(s))),
        })
        .0
}

/// Shifts each part as a whole into its instrument's playable range.
pub fn fit_register(notes: &[ScoreNote], orchestration: &Orchestration, ranges: &InstrumentRanges) -> Vec<ScoreNote> {
    let mut out = notes.to_vec();
    for voice in Voice::ALL {
        let pitches: Vec<u8> = notes.iter().filter(|n| n.voice == voice).map(|n| n.pitch).collect();
        let shift = register_shift(&pitches, ranges.range(orchestration.instrument(voice)));
        if shift != 0 {
            for n in out.iter_mut().filter(|n| n.voice == voice) {
                n.pitch = (i32::from(n.pitch) + shift) as u8;
            }
        }
    }
    out
}
