//! Per-note expression controls and their rendering into framewise
//! synthesis parameters.

mod pitch;
mod render;

pub use pitch::{apply_pitch_correction, sample_intonation, AlphaMode, IntonationConfig, PitchCorrectionInputs};
pub use render::{
    frame_span, render_synthesis_params, spectral_centroid, stitch_note_segments, FrameLayout, RenderConfig, Segment,
    SynthesisParams,
};

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::augment::{Instrument, PerformanceNote};
use crate::error::{Error, Result};

/// Six normalized performance controls for one note.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoteExpression {
    pub volume: f64,
    pub volume_fluctuation: f64,
    pub volume_peak_position: f64,
    pub vibrato: f64,
    pub brightness: f64,
    pub attack_noise: f64,
}

impl NoteExpression {
    pub const FIELDS: [&'static str; 6] =
        ["volume", "volume_fluctuation", "volume_peak_position", "vibrato", "brightness", "attack_noise"];

    pub fn to_array(self) -> [f64; 6] {
        [self.volume, self.volume_fluctuation, self.volume_peak_position, self.vibrato, self.brightness, self.attack_noise]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        NoteExpression {
            volume: a[0],
            volume_fluctuation: a[1],
            volume_peak_position: a[2],
            vibrato: a[3],
            brightness: a[4],
            attack_noise: a[5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::FIELDS.iter().zip(self.to_array()) {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!("expression field {name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Beta distribution parameterized by its mean and concentration `a + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub mean: f64,
    pub concentration: f64,
}

impl BetaPrior {
    pub const fn new(mean: f64, concentration: f64) -> Self {
        BetaPrior { mean, concentration }
    }

    fn distribution(&self) -> Result<Beta<f64>> {
        if !(self.mean > 0.0 && self.mean < 1.0 && self.concentration > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "beta prior needs 0 < mean < 1 and concentration > 0, got {self:?}"
            )));
        }
        Beta::new(self.mean * self.concentration, (1.0 - self.mean) * self.concentration)
            .map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

/// Independent beta priors over the six expression controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpressionPrior {
    pub volume: BetaPrior,
    pub volume_fluctuation: BetaPrior,
    pub volume_peak_position: BetaPrior,
    pub vibrato: BetaPrior,
    pub brightness: BetaPrior,
    pub attack_noise: BetaPrior,
}

impl ExpressionPrior {
    pub fn fields(&self) -> [BetaPrior; 6] {
        [self.volume, self.volume_fluctuation, self.volume_peak_position, self.vibrato, self.brightness, self.attack_noise]
    }

    pub fn means(&self) -> [f64; 6] {
        self.fields().map(|p| p.mean)
    }

    /// `[volume, fluctuation, peak position, vibrato, brightness, attack noise]`
    /// means, all with concentration 20.
    pub fn from_means(m: [f64; 6]) -> Self {
        let p = |mean| BetaPrior::new(mean, 20.0);
        ExpressionPrior {
            volume: p(m[0]),
            volume_fluctuation: p(m[1]),
            volume_peak_position: p(m[2]),
            vibrato: p(m[3]),
            brightness: p(m[4]),
            attack_noise: p(m[5]),
        }
    }

    pub fn default_for(instrument: Instrument) -> Self {
        use Instrument::*;
        let means = match instrument {
            Violin => [0.60, 0.25, 0.40, 0.60, 0.60, 0.30],
            Viola => [0.55, 0.25, 0.40, 0.55, 0.50, 0.30],
            Cello => [0.60, 0.25, 0.40, 0.55, 0.45, 0.35],
            DoubleBass => [0.60, 0.20, 0.35, 0.35, 0.30, 0.40],
            Flute => [0.50, 0.30, 0.45, 0.45, 0.35, 0.45],
            Oboe => [0.55, 0.20, 0.40, 0.35, 0.70, 0.25],
            Clarinet => [0.55, 0.15, 0.45, 0.05, 0.40, 0.20],
            Saxophone => [0.60, 0.25, 0.40, 0.40, 0.65, 0.30],
            Bassoon => [0.55, 0.20, 0.40, 0.20, 0.45, 0.30],
            Trumpet => [0.65, 0.15, 0.30, 0.15, 0.75, 0.35],
            FrenchHorn => [0.55, 0.15, 0.45, 0.10, 0.40, 0.25],
            Trombone => [0.60, 0.15, 0.35, 0.10, 0.60, 0.35],
            Tuba => [0.60, 0.15, 0.35, 0.10, 0.35, 0.30],
        };
        Self::from_means(means)
    }

    pub fn validate(&self) -> Result<()> {
        self.fields().iter().try_for_each(|p| p.distribution().map(|_| ()))
    }
}

/// Expression prior per instrument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExpressionPriors(pub BTreeMap<Instrument, ExpressionPrior>);

impl Default for ExpressionPriors {
    fn default() -> Self {
        ExpressionPriors(Instrument::ALL.iter().map(|&i| (i, ExpressionPrior::default_for(i))).collect())
    }
}

impl ExpressionPriors {
    pub fn get(&self, instrument: Instrument) -> Result<&ExpressionPrior> {
        self.0.get(&instrument).ok_or(Error::UnknownInstrument(instrument))
    }

    pub fn validate(&self) -> Result<()> {
        self.0.values().try_for_each(ExpressionPrior::validate)
    }
}

/// Draws one expression per note from the instrument's prior.
pub fn generate_expressions<R: Rng + ?Sized>(
    notes: &[PerformanceNote],
    instrument: Instrument,
    priors: &ExpressionPriors,
    rng: &mut R,
) -> Result<Vec<NoteExpression>> {
    let prior = priors.get(instrument)?;
    let dists: Vec<Beta<f64>> = prior.fields().iter().map(BetaPrior::distribution).collect::<Result<_>>()?;
    Ok(notes
        .iter()
        .map(|_| {
            let mut values = [0.0; 6];
            for (v, d) in values.iter_mut().zip(&dists) {
                *v = d.sample(rng).clamp(0.0, 1.0);
            }
            NoteExpression::from_array(values)
        })
        .collect())
}
