use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{midi, read_expression_csv, read_metadata, stem_name, wav, TrackMetadata, METADATA, MIX};
use crate::mixdown::{db_to_gain, Loudness, LoudnessMeter};
use crate::score::Voice;
use crate::synth::AudioBuffer;

/// Maximum RMS of `mix - Σ stems` after independent 16-bit quantization.
pub const MIXTURE_RMS_TOLERANCE: f64 = 1e-4;
pub const LOUDNESS_TOLERANCE_LU: f64 = 0.1;
pub const DURATION_TOLERANCE_S: f64 = 0.060;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    MissingFile { file: PathBuf },
    Unreadable { file: PathBuf, error: String },
    WavFormat { file: PathBuf, detail: String },
    LengthMismatch { file: PathBuf, samples: usize, expected: usize },
    MixtureMismatch { rms_residual: f64 },
    Loudness { file: PathBuf, measured_lufs: Option<f64>, expected_lufs: f64 },
    Peak { peak_dbfs: f64, ceiling_dbfs: f64 },
    DurationMismatch { file: PathBuf, midi_s: f64, audio_s: f64 },
    ExpressionCount { file: PathBuf, expressions: usize, notes: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub track_dir: PathBuf,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks one written track. Problems are collected, never raised.
pub fn validate_track(dir: &Path) -> ValidationReport {
    let mut v = Vec::new();
    let rel = |p: &str| PathBuf::from(p);
    let mut expected = vec![rel(MIX), rel(METADATA)];
    for voice in Voice::ALL {
        let name = stem_name(voice);
        expected.push(rel(&format!("stems_audio/{name}.wav")));
        expected.push(rel(&format!("stems_midi/{name}.mid")));
        expected.push(rel(&format!("expression/{name}.csv")));
        expected.push(rel(&format!("synth_params/{name}.csv")));
    }
    for file in &expected {
        if !dir.join(file).is_file() {
            v.push(Violation::MissingFile { file: file.clone() });
        }
    }
    let present = |file: &Path| dir.join(file).is_file();

    let meta: Option<TrackMetadata> = if present(&rel(METADATA)) {
        match read_metadata(dir) {
            Ok(m) => Some(m),
            Err(e) => {
                v.push(Violation::Unreadable { file: rel(METADATA), error: e.to_string() });
                None
            }
        }
    } else {
        None
    };
    let sample_rate = meta.as_ref().map_or(16_000, |m| m.sample_rate);

    let load = |file: PathBuf, v: &mut Vec<Violation>| -> Option<AudioBuffer> {
        if !present(&file) {
            return None;
        }
        match wav::read(&dir.join(&file)) {
            Ok(w) => {
                let fields = (w.format_tag, w.channels, w.sample_rate, w.bits_per_sample);
                if fields != (1, 1, sample_rate, 16) {
                    v.push(Violation::WavFormat {
                        file,
                        detail: format!(
                            "format {}, {} channel(s), {} Hz, {} bit; expected PCM mono {sample_rate} Hz 16 bit",
                            fields.0, fields.1, fields.2, fields.3
                        ),
                    });
                    return None;
                }
                Some(AudioBuffer::new(w.to_f64(), w.sample_rate))
            }
            Err(e) => {
                v.push(Violation::Unreadable { file, error: e.to_string() });
                None
            }
        }
    };
    let mix = load(rel(MIX), &mut v);
    let stems: Vec<Option<AudioBuffer>> =
        Voice::ALL.iter().map(|&voice| load(rel(&format!("stems_audio/{}.wav", stem_name(voice))), &mut v)).collect();

    if let Some(mix) = &mix {
        if let Some(m) = &meta {
            if mix.len() != m.num_samples {
                v.push(Violation::LengthMismatch { file: rel(MIX), samples: mix.len(), expected: m.num_samples });
            }
        }
        let mut aligned = true;
        for (voice, s) in Voice::ALL.iter().zip(&stems) {
            if let Some(s) = s {
                if s.len() != mix.len() {
                    aligned = false;
                    v.push(Violation::LengthMismatch {
                        file: rel(&format!("stems_audio/{}.wav", stem_name(*voice))),
                        samples: s.len(),
                        expected: mix.len(),
                    });
                }
            }
        }
        if aligned && stems.iter().all(Option::is_some) && !mix.is_empty() {
            let residual = (0..mix.len())
                .map(|n| {
                    let sum: f64 = stems.iter().flatten().map(|s| s.samples[n]).sum();
                    (mix.samples[n] - sum).powi(2)
                })
                .sum::<f64>();
            let rms = (residual / mix.len() as f64).sqrt();
            if rms > MIXTURE_RMS_TOLERANCE {
                v.push(Violation::MixtureMismatch { rms_residual: rms });
            }
        }
        let ceiling_dbfs = meta.as_ref().map_or(-1.0, |m| m.mastering.peak_ceiling_dbfs);
        if mix.peak() > db_to_gain(ceiling_dbfs) + 1.0 / wav::FULL_SCALE {
            v.push(Violation::Peak { peak_dbfs: 20.0 * mix.peak().log10(), ceiling_dbfs });
        }
    }

    if let Some(m) = &meta {
        let meter = LoudnessMeter::default();
        let expected_lufs = m.mastering.target_lufs + m.mastering.peak_guard_db;
        for (i, voice) in Voice::ALL.iter().enumerate() {
            let Some(stem) = &stems[i] else { continue };
            if m.mastering.stem_gains.get(i).is_some_and(|g| g.silent) {
                continue;
            }
            let file = rel(&format!("stems_audio/{}.wav", stem_name(*voice)));
            let measured = meter.integrated_loudness(stem).ok().and_then(Loudness::lufs);
            if measured.is_none_or(|l| (l - expected_lufs).abs() > LOUDNESS_TOLERANCE_LU) {
                v.push(Violation::Loudness { file, measured_lufs: measured, expected_lufs });
            }
        }
    }

    for (i, voice) in Voice::ALL.iter().enumerate() {
        let name = stem_name(*voice);
        let midi_file = rel(&format!("stems_midi/{name}.mid"));
        if !present(&midi_file) {
            continue;
        }
        let smf = match std::fs::read(dir.join(&midi_file)).map_err(|e| e.to_string()).and_then(|b| midi::Smf::parse(&b).map_err(|e| e.to_string())) {
            Ok(s) => s,
            Err(error) => {
                v.push(Violation::Unreadable { file: midi_file, error });
                continue;
            }
        };
        let notes = smf.notes();
        if let Some(audio) = stems[i].as_ref().or(mix.as_ref()) {
            let midi_s = notes.iter().map(|n| n.end_tick).max().map_or(0.0, |t| smf.tick_to_seconds(t));
            if (audio.duration_s() - midi_s).abs() > DURATION_TOLERANCE_S {
                v.push(Violation::DurationMismatch { file: midi_file.clone(), midi_s, audio_s: audio.duration_s() });
            }
        }
        let expr_file = rel(&format!("expression/{name}.csv"));
        if present(&expr_file) {
            match read_expression_csv(&dir.join(&expr_file)) {
                Ok(rows) => {
                    let meta_notes = meta.as_ref().and_then(|m| m.stems.get(i)).map(|s| s.notes.len());
                    if rows.len() != notes.len() || meta_notes.is_some_and(|n| n != rows.len()) {
                        v.push(Violation::ExpressionCount { file: expr_file, expressions: rows.len(), notes: notes.len() });
                    }
                }
                Err(e) => v.push(Violation::Unreadable { file: expr_file, error: e.to_string() }),
            }
        }
    }
    ValidationReport { track_dir: dir.to_path_buf(), violations: v }
}
