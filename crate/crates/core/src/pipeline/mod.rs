//! Corpus configuration, generation, validation and statistics.

mod generate;
mod stats;

pub use generate::{generate_track, run_generate, run_validate, track_id, track_seed, GenerateSummary, ValidateSummary};
pub use stats::{run_stats, CorpusStats, EnsembleStats, Histogram, StatsAccumulator};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{Ensemble, InstrumentRanges, MicrotimingConfig, TempoConfig};
use crate::dataset::SplitPolicy;
use crate::error::{Error, Result};
use crate::expression::{AlphaMode, ExpressionPriors, FrameLayout, IntonationConfig, RenderConfig};
use crate::mixdown::MasteringConfig;
use crate::score::{ExternalScoreModel, GibbsConfig, NoteModel, PitchRangeTable, VoiceLeadingModel};
use crate::synth::SynthConfig;

/// Source of the four-voice scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    VoiceLeading(VoiceLeadingModel),
    /// Replays a four-voice MIDI file through the sampler.
    External { path: PathBuf },
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::VoiceLeading(VoiceLeadingModel::default())
    }
}

impl ModelConfig {
    pub fn build(&self) -> Result<Box<dyn NoteModel>> {
        match self {
            ModelConfig::VoiceLeading(m) => {
                m.validate()?;
                Ok(Box::new(m.clone()))
            }
            ModelConfig::External { path } => Ok(Box::new(ExternalScoreModel::from_midi_file(path)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoreConfig {
    pub max_attempts: u32,
    pub gibbs: GibbsConfig,
    pub ranges: PitchRangeTable,
    pub model: ModelConfig,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            max_attempts: 100,
            gibbs: GibbsConfig::default(),
            ranges: PitchRangeTable::default(),
            model: ModelConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpressionConfig {
    pub alpha: AlphaMode,
    pub render: RenderConfig,
    pub intonation: IntonationConfig,
    pub priors: ExpressionPriors,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSection {
    pub num_harmonics: usize,
    pub num_noise_bands: usize,
    pub fir_taps: usize,
    pub fft_size: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        let layout = FrameLayout::default();
        let synth = SynthConfig::default();
        SynthSection {
            num_harmonics: layout.num_harmonics,
            num_noise_bands: layout.num_noise_bands,
            fir_taps: synth.fir_taps,
            fft_size: synth.fft_size,
        }
    }
}

/// Everything that determines a corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Tracks per enabled ensemble.
    pub num_tracks: usize,
    pub ensembles: Vec<Ensemble>,
    pub output: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub overwrite: bool,
    pub sample_rate: u32,
    pub frame_rate: f64,
    pub score: ScoreConfig,
    pub tempo: TempoConfig,
    pub microtiming: MicrotimingConfig,
    pub instrument_ranges: InstrumentRanges,
    pub expression: ExpressionConfig,
    pub synth: SynthSection,
    pub mastering: MasteringConfig,
    pub split: SplitPolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            num_tracks: 50,
            ensembles: Ensemble::ALL.to_vec(),
            output: PathBuf::from("corpus"),
            workers: 0,
            overwrite: false,
            sample_rate: 16_000,
            frame_rate: 250.0,
            score: ScoreConfig::default(),
            tempo: TempoConfig::default(),
            microtiming: MicrotimingConfig::default(),
            instrument_ranges: InstrumentRanges::default(),
            expression: ExpressionConfig::default(),
            synth: SynthSection::default(),
            mastering: MasteringConfig::default(),
            split: SplitPolicy::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always representable as TOML")
    }

    pub fn layout(&self) -> FrameLayout {
        FrameLayout {
            frame_rate: self.frame_rate,
            num_harmonics: self.synth.num_harmonics,
            num_noise_bands: self.synth.num_noise_bands,
        }
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig { sample_rate: self.sample_rate, fir_taps: self.synth.fir_taps, fft_size: self.synth.fft_size }
    }

    /// Checks every module configuration; nothing is generated before this
    /// passes.
    pub fn validate(&self) -> Result<()> {
        if self.ensembles.is_empty() {
            return Err(Error::InvalidConfig("no ensembles enabled".into()));
        }
        if self.score.max_attempts == 0 {
            return Err(Error::InvalidConfig("score.max_attempts must be at least 1".into()));
        }
        self.score.gibbs.validate()?;
        self.score.ranges.validate()?;
        if let ModelConfig::VoiceLeading(m) = &self.score.model {
            m.validate()?;
        }
        self.tempo.validate()?;
        self.microtiming.validate()?;
        self.instrument_ranges.validate()?;
        self.expression.alpha.validate()?;
        self.expression.render.validate()?;
        self.expression.intonation.validate()?;
        self.expression.priors.validate()?;
        self.layout().validate()?;
        self.synth_config().validate(self.frame_rate)?;
        self.mastering.validate()?;
        self.split.validate()?;
        Ok(())
    }
}
