use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineConfig;
use crate::augment::{assign_orchestration, fit_register, realize_timing, sample_tempo, step_seconds, Ensemble};
use crate::dataset::{
    assign_split, list_tracks, read_manifest, validate_track, write_manifest, write_track, ManifestEntry, MasteringRecord,
    NoteRecord, StemMetadata, TrackBundle, TrackMetadata, ValidationReport,
};
use crate::error::{Error, Result};
use crate::expression::{
    apply_pitch_correction, generate_expressions, render_synthesis_params, sample_intonation, stitch_note_segments,
    PitchCorrectionInputs, Segment,
};
use crate::mixdown::master;
use crate::rng::{derive_indexed, derive_seed, indexed_stream, stream};
use crate::score::{pianoroll_to_notes, sample_valid_chorale, GibbsConfig, NoteModel, Voice, NUM_STEPS};
use crate::synth::{synthesize_stem, NoiseSource};

pub fn track_id(ensemble: Ensemble, index: usize) -> String {
    format!("{}_{index:05}", ensemble.name())
}

/// Seed of one track; depends only on the global seed, ensemble and index.
pub fn track_seed(global: u64, ensemble: Ensemble, index: usize) -> u64 {
    derive_indexed(global, ensemble.name(), index as u64)
}

/// Runs the whole chain for one track and returns it in memory.
pub fn generate_track(cfg: &PipelineConfig, model: &dyn NoteModel, ensemble: Ensemble, index: usize) -> Result<TrackBundle> {
    let id = track_id(ensemble, index);
    let seed = track_seed(cfg.seed, ensemble, index);
    let layout = cfg.layout();
    let synth = cfg.synth_config();
    let hop = synth.hop(cfg.frame_rate)?;

    let gibbs = GibbsConfig { seed: derive_seed(seed, "score"), ..cfg.score.gibbs.clone() };
    let (roll, attempts) = sample_valid_chorale(model, &gibbs, &cfg.score.ranges, cfg.score.max_attempts)?;
    let score_notes = pianoroll_to_notes(&roll);

    let bpm = sample_tempo(&cfg.tempo, &mut stream(seed, "tempo"));
    let orchestration = assign_orchestration(&ensemble.spec(), &mut stream(seed, "orchestration"))?;
    let fitted = fit_register(&score_notes, &orchestration, &cfg.instrument_ranges);
    let performed = realize_timing(&fitted, bpm, &orchestration, &cfg.microtiming, &mut stream(seed, "timing"))?;

    let duration_s = NUM_STEPS as f64 * step_seconds(bpm) + cfg.microtiming.bound;
    let total_frames = (duration_s * cfg.frame_rate).ceil() as usize;
    let labels = orchestration.labels();
    let ex = &cfg.expression;

    let mut stems_meta = Vec::with_capacity(Voice::ALL.len());
    let mut stem_params = Vec::with_capacity(Voice::ALL.len());
    let mut raw_audio = Vec::with_capacity(Voice::ALL.len());
    for voice in Voice::ALL {
        let i = voice.index() as u64;
        let instrument = orchestration.instrument(voice);
        let mut notes: Vec<_> = performed.iter().filter(|n| n.part == voice).cloned().collect();
        notes.sort_by_key(|n| n.quantized_onset_step);
        let expressions = generate_expressions(&notes, instrument, &ex.priors, &mut indexed_stream(seed, "expression", i))?;
        let mut intonation_rng = indexed_stream(seed, "intonation", i);
        let mut alpha_rng = indexed_stream(seed, "alpha", i);

        let mut segments = Vec::with_capacity(notes.len());
        let mut records = Vec::with_capacity(notes.len());
        for (note, expression) in notes.into_iter().zip(expressions) {
            let Segment { start_frame, mut params } = render_synthesis_params(&note, &expression, &ex.render, layout)?;
            let drift = sample_intonation(params.num_frames(), cfg.frame_rate, &ex.intonation, &mut intonation_rng);
            for (f, d) in params.f0.iter_mut().zip(&drift) {
                *f += d;
            }
            let alpha = ex.alpha.draw(&mut alpha_rng);
            params.f0 = apply_pitch_correction(&PitchCorrectionInputs::from_f0(note.pitch, &params.f0, alpha)?)?;
            segments.push(Segment { start_frame, params });
            records.push(NoteRecord { note, expression, alpha });
        }
        let params = stitch_note_segments(&segments, total_frames, layout, ex.render.crossfade_s)?;
        raw_audio.push(synthesize_stem(&params, &synth, &NoiseSource::new(seed, i))?);
        stem_params.push(params);
        stems_meta.push(StemMetadata {
            part: voice,
            instrument,
            label: labels[voice.index()].clone(),
            gm_program: instrument.gm_program(),
            notes: records,
        });
    }

    let mastered = master(&raw_audio, &cfg.mastering)?;
    let meta = TrackMetadata {
        split: assign_split(&id, &cfg.split),
        track_id: id,
        ensemble,
        tempo_bpm: bpm,
        seed,
        sample_rate: cfg.sample_rate,
        frame_rate: cfg.frame_rate,
        num_samples: total_frames * hop,
        duration_s: (total_frames * hop) as f64 / f64::from(cfg.sample_rate),
        gibbs_attempts: attempts,
        mastering: MasteringRecord {
            target_lufs: cfg.mastering.target_lufs,
            peak_ceiling_dbfs: cfg.mastering.peak_ceiling_dbfs,
            peak_guard_db: mastered.peak_guard_db,
            stem_gains: mastered.stem_gains,
        },
        stems: stems_meta,
    };
    let bundle = TrackBundle { meta, mix: mastered.mix, stem_audio: mastered.stems, stem_params };
    bundle.validate()?;
    Ok(bundle)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub entries: Vec<ManifestEntry>,
    /// `(track_id, error)` for tracks that failed and were skipped.
    pub failures: Vec<(String, String)>,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))
}

/// Generates and writes every configured track, then the manifest.
///
/// Tracks are independent, so the corpus does not depend on the worker
/// count or scheduling. Failed tracks are logged and reported, not fatal.
pub fn run_generate(cfg: &PipelineConfig) -> Result<GenerateSummary> {
    cfg.validate()?;
    let model = cfg.score.model.build()?;
    let root = cfg.output.as_path();
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let jobs: Vec<(Ensemble, usize)> =
        cfg.ensembles.iter().flat_map(|&e| (0..cfg.num_tracks).map(move |i| (e, i))).collect();
    let total = jobs.len();
    let done = AtomicUsize::new(0);
    let results: Vec<std::result::Result<ManifestEntry, (String, String)>> = thread_pool(cfg.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(ensemble, index)| {
                let id = track_id(ensemble, index);
                let outcome = generate_track(cfg, model.as_ref(), ensemble, index)
                    .and_then(|bundle| write_track(&bundle, root, cfg.overwrite));
                let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                match outcome {
                    Ok(entry) => {
                        log::info!("[{n}/{total}] wrote {}", entry.path);
                        Ok(entry)
                    }
                    Err(e) => {
                        log::error!("[{n}/{total}] {id} failed: {e}");
                        Err((id, e.to_string()))
                    }
                }
            })
            .collect()
    });
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(e) => entries.push(e),
            Err(f) => failures.push(f),
        }
    }
    write_manifest(root, &entries)?;
    entries.sort_by(|a, b| a.track_id.cmp(&b.track_id));
    Ok(GenerateSummary { entries, failures })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidateSummary {
    pub reports: Vec<ValidationReport>,
    /// Rows in `manifest.jsonl`, or `None` if it is missing or unreadable.
    pub manifest_tracks: Option<usize>,
}

impl ValidateSummary {
    pub fn failing(&self) -> impl Iterator<Item = &ValidationReport> {
        self.reports.iter().filter(|r| !r.is_ok())
    }

    pub fn manifest_matches(&self) -> bool {
        self.manifest_tracks == Some(self.reports.len())
    }

    pub fn is_ok(&self) -> bool {
        self.manifest_matches() && self.failing().next().is_none()
    }
}

/// Validates every track directory under `root`.
pub fn run_validate(root: &Path, workers: usize) -> Result<ValidateSummary> {
    if !root.is_dir() {
        return Err(Error::io(root, std::io::Error::new(std::io::ErrorKind::NotFound, "corpus root not found")));
    }
    let dirs: Vec<PathBuf> = list_tracks(root)?;
    let reports = thread_pool(workers)?.install(|| dirs.par_iter().map(|d| validate_track(d)).collect());
    let manifest_tracks = read_manifest(root).ok().map(|m| m.len());
    Ok(ValidateSummary { reports, manifest_tracks })
}
