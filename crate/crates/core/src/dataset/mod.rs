//! On-disk corpus layout, split assignment and validation.
//!
//! ```text
//! <root>/manifest.jsonl
//! <root>/<split>/<track_id>/mix.wav
//!                          /metadata.json
//!                          /stems_audio/{i}_{part}.wav
//!                          /stems_midi/{i}_{part}.mid
//!                          /expression/{i}_{part}.csv
//!                          /synth_params/{i}_{part}.csv
//! ```
//!
//! `i` is the SATB index and `part` the voice name (`0_soprano` ...
//! `3_bass`). Audio is 16-bit mono PCM; MIDI is format 0 at 220 PPQN with the
//! quantized grid times. Exact performed timing lives in `metadata.json` and
//! in the framewise synthesis parameters.

pub mod midi;
mod tables;
mod validate;
pub mod wav;

pub use tables::{read_expression_csv, read_synth_params_csv, write_expression_csv, write_synth_params_csv, ExpressionRow};
pub use validate::{validate_track, ValidationReport, Violation};

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::{Ensemble, Instrument, PerformanceNote};
use crate::error::{Error, Result};
use crate::expression::{NoteExpression, SynthesisParams};
use crate::mixdown::StemGain;
use crate::rng::indexed_stream;
use crate::score::{Voice, NUM_VOICES, STEPS_PER_BEAT};
use crate::synth::AudioBuffer;

pub const MANIFEST: &str = "manifest.jsonl";
pub const METADATA: &str = "metadata.json";
pub const MIX: &str = "mix.wav";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitPolicy {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitPolicy {
    fn default() -> Self {
        SplitPolicy { train: 0.8, valid: 0.1, test: 0.1 }
    }
}

impl SplitPolicy {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.valid, self.test];
        if parts.iter().any(|p| !(*p >= 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("split fractions must be nonnegative and sum to 1".into()));
        }
        Ok(())
    }
}

/// Maps a track id to `[0, 1)` through SHA-256 and picks the split whose
/// cumulative fraction covers it.
pub fn assign_split(track_id: &str, policy: &SplitPolicy) -> Split {
    let digest = Sha256::digest(track_id.as_bytes());
    let u = u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes")) as f64 / 2f64.powi(64);
    if u < policy.train {
        Split::Train
    } else if u < policy.train + policy.valid {
        Split::Valid
    } else {
        Split::Test
    }
}

/// File stem shared by a part's audio, MIDI and tables.
pub fn stem_name(voice: Voice) -> String {
    format!("{}_{}", voice.index(), voice.name())
}

pub fn track_dir(root: &Path, split: Split, track_id: &str) -> PathBuf {
    root.join(split.name()).join(track_id)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoteRecord {
    #[serde(flatten)]
    pub note: PerformanceNote,
    pub expression: NoteExpression,
    /// Pitch-correction strength applied to this note.
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StemMetadata {
    pub part: Voice,
    pub instrument: Instrument,
    pub label: String,
    pub gm_program: u8,
    pub notes: Vec<NoteRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasteringRecord {
    pub target_lufs: f64,
    pub peak_ceiling_dbfs: f64,
    pub peak_guard_db: f64,
    pub stem_gains: Vec<StemGain>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackMetadata {
    pub track_id: String,
    pub split: Split,
    pub ensemble: Ensemble,
    pub tempo_bpm: u32,
    pub seed: u64,
    pub sample_rate: u32,
    pub frame_rate: f64,
    pub num_samples: usize,
    pub duration_s: f64,
    pub gibbs_attempts: u32,
    pub mastering: MasteringRecord,
    pub stems: Vec<StemMetadata>,
}

/// Everything generated for one track.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackBundle {
    pub meta: TrackMetadata,
    pub mix: AudioBuffer,
    /// Mastered stem audio in SATB order.
    pub stem_audio: Vec<AudioBuffer>,
    pub stem_params: Vec<SynthesisParams>,
}

impl TrackBundle {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidBundle(msg.into()));
        if self.meta.stems.len() != NUM_VOICES || self.stem_audio.len() != NUM_VOICES || self.stem_params.len() != NUM_VOICES {
            return bad("a track has exactly four stems");
        }
        if self.meta.stems.iter().zip(Voice::ALL).any(|(s, v)| s.part != v) {
            return bad("stems must be in SATB order");
        }
        if self.stem_audio.iter().any(|a| a.len() != self.mix.len() || a.sample_rate != self.mix.sample_rate) {
            return bad("all audio must share length and sample rate");
        }
        if self.mix.len() != self.meta.num_samples || self.mix.sample_rate != self.meta.sample_rate {
            return bad("metadata disagrees with the mix");
        }
        Ok(())
    }
}

/// One manifest line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub track_id: String,
    pub split: Split,
    pub ensemble: Ensemble,
    pub tempo_bpm: u32,
    pub instruments: Vec<Instrument>,
    pub stem_gains_db: Vec<f64>,
    pub peak_guard_db: f64,
    pub duration_s: f64,
    /// Track directory relative to the corpus root.
    pub path: String,
}

const TICKS_PER_STEP: u64 = midi::DEFAULT_PPQN as u64 / STEPS_PER_BEAT as u64;

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Writes a track below `root`, staging it in a hidden sibling directory and
/// renaming it into place.
pub fn write_track(bundle: &TrackBundle, root: &Path, overwrite: bool) -> Result<ManifestEntry> {
    bundle.validate()?;
    let meta = &bundle.meta;
    let final_dir = track_dir(root, meta.split, &meta.track_id);
    if final_dir.exists() && !overwrite {
        return Err(Error::TrackExists(final_dir));
    }
    let parent = root.join(meta.split.name());
    create_dir(&parent)?;
    let staging = parent.join(format!(".staging-{}", meta.track_id));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    for sub in ["stems_audio", "stems_midi", "expression", "synth_params"] {
        create_dir(&staging.join(sub))?;
    }

    let sr = meta.sample_rate;
    let mut dither = indexed_stream(meta.seed, "dither", NUM_VOICES as u64);
    wav::write(&staging.join(MIX), &wav::quantize_tpdf(&bundle.mix.samples, &mut dither), sr)?;
    for (i, stem) in meta.stems.iter().enumerate() {
        let name = stem_name(stem.part);
        let mut dither = indexed_stream(meta.seed, "dither", i as u64);
        let pcm = wav::quantize_tpdf(&bundle.stem_audio[i].samples, &mut dither);
        wav::write(&staging.join("stems_audio").join(format!("{name}.wav")), &pcm, sr)?;

        let spans: Vec<midi::NoteSpan> = stem
            .notes
            .iter()
            .map(|r| midi::NoteSpan {
                pitch: r.note.pitch,
                velocity: (1.0 + 126.0 * r.expression.volume).round() as u8,
                start_tick: u64::from(r.note.quantized_onset_step) * TICKS_PER_STEP,
                end_tick: u64::from(r.note.quantized_onset_step + r.note.quantized_duration_steps) * TICKS_PER_STEP,
            })
            .collect();
        let smf = midi::write_monophonic(&spans, meta.tempo_bpm, midi::DEFAULT_PPQN, stem.instrument.gm_program(), &stem.label);
        write_file(&staging.join("stems_midi").join(format!("{name}.mid")), &smf)?;
        write_expression_csv(&staging.join("expression").join(format!("{name}.csv")), &stem.notes)?;
        write_synth_params_csv(&staging.join("synth_params").join(format!("{name}.csv")), &bundle.stem_params[i])?;
    }
    let json = serde_json::to_vec_pretty(meta).map_err(|e| Error::Json { path: staging.join(METADATA), source: e })?;
    write_file(&staging.join(METADATA), &json)?;

    if final_dir.exists() {
        fs::remove_dir_all(&final_dir).map_err(|e| Error::io(&final_dir, e))?;
    }
    fs::rename(&staging, &final_dir).map_err(|e| Error::io(&final_dir, e))?;

    Ok(ManifestEntry {
        track_id: meta.track_id.clone(),
        split: meta.split,
        ensemble: meta.ensemble,
        tempo_bpm: meta.tempo_bpm,
        instruments: meta.stems.iter().map(|s| s.instrument).collect(),
        stem_gains_db: meta.mastering.stem_gains.iter().map(|g| g.gain_db).collect(),
        peak_guard_db: meta.mastering.peak_guard_db,
        duration_s: meta.duration_s,
        path: format!("{}/{}", meta.split.name(), meta.track_id),
    })
}

/// Writes the manifest sorted by track id, replacing any existing one.
pub fn write_manifest(root: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut sorted: Vec<&ManifestEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| a.track_id.cmp(&b.track_id));
    let path = root.join(MANIFEST);
    let tmp = root.join(format!(".{MANIFEST}.tmp"));
    let mut out = Vec::new();
    for e in sorted {
        serde_json::to_writer(&mut out, e).map_err(|source| Error::Json { path: path.clone(), source })?;
        out.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
    }
    write_file(&tmp, &out)?;
    fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(root: &Path) -> Result<Vec<ManifestEntry>> {
    let path = root.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|source| Error::Json { path: path.clone(), source }))
        .collect()
}

pub fn read_metadata(dir: &Path) -> Result<TrackMetadata> {
    let path = dir.join(METADATA);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::Json { path, source })
}

/// Track directories under `root`, sorted, found by walking the split
/// folders rather than trusting the manifest.
pub fn list_tracks(root: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for split in Split::ALL {
        let dir = root.join(split.name());
        if !dir.is_dir() {
            continue;
        }
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let name = entry.file_name();
            if entry.path().is_dir() && !name.to_string_lossy().starts_with('.') {
                out.push(entry.path());
            }
        }
    }
    out.sort();
    Ok(out)
}
