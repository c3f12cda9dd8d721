use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::Ensemble;
use crate::dataset::{list_tracks, read_metadata, read_synth_params_csv, stem_name, TrackMetadata};
use crate::error::{Error, Result};
use crate::expression::{frame_span, SynthesisParams};

/// Fixed-width histogram over `[low, low + bins·width)`; values outside are
/// counted in the edge bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub low: f64,
    pub bin_width: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(low: f64, high: f64, bin_width: f64) -> Self {
        let bins = ((high - low) / bin_width).round().max(1.0) as usize;
        Histogram { low, bin_width, counts: vec![0; bins] }
    }

    pub fn add(&mut self, x: f64) {
        let i = ((x - self.low) / self.bin_width).floor();
        let i = (i.max(0.0) as usize).min(self.counts.len() - 1);
        self.counts[i] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin masses summing to 1, or all zero for an empty histogram.
    pub fn masses(&self) -> Vec<f64> {
        let total = self.total();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        self.counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.low + (i as f64 + 0.5) * self.bin_width
    }

    /// Center of the fullest bin (the first on ties).
    pub fn mode(&self) -> Option<f64> {
        if self.total() == 0 {
            return None;
        }
        let max = *self.counts.iter().max()?;
        self.counts.iter().position(|&c| c == max).map(|i| self.bin_center(i))
    }

    fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub tracks: usize,
    pub total_duration_s: f64,
    pub notes: usize,
}

impl EnsembleStats {
    pub fn mean_duration_s(&self) -> f64 {
        if self.tracks == 0 {
            0.0
        } else {
            self.total_duration_s / self.tracks as f64
        }
    }
}

/// Intonation statistics of a corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Voiced-frame f0 minus the nearest integer pitch, in semitones.
    pub frame_deviation: Histogram,
    /// `|mean f0 over a note - note pitch|`, in semitones.
    pub note_mean_abs_deviation: Histogram,
    pub voiced_frames: u64,
    pub notes: u64,
    pub mean_note_abs_deviation: f64,
    pub ensembles: BTreeMap<Ensemble, EnsembleStats>,
    pub unreadable: Vec<(PathBuf, String)>,
}

impl CorpusStats {
    pub fn write_histograms_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |source| Error::Csv { path: PathBuf::from("<histograms>"), source };
        w.write_record(["histogram", "bin_low", "bin_high", "count", "mass"]).map_err(err)?;
        for (name, h) in [("frame_deviation", &self.frame_deviation), ("note_mean_abs_deviation", &self.note_mean_abs_deviation)] {
            for (i, (count, mass)) in h.counts.iter().zip(h.masses()).enumerate() {
                let lo = h.low + i as f64 * h.bin_width;
                w.write_record([name.to_string(), format!("{lo:.4}"), format!("{:.4}", lo + h.bin_width), count.to_string(), mass.to_string()])
                    .map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::io("<histograms>", e))
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |source| Error::Csv { path: PathBuf::from("<summary>"), source };
        w.write_record(["ensemble", "tracks", "total_duration_s", "mean_duration_s", "notes"]).map_err(err)?;
        for (e, s) in &self.ensembles {
            w.write_record([
                e.name().to_string(),
                s.tracks.to_string(),
                format!("{:.3}", s.total_duration_s),
                format!("{:.3}", s.mean_duration_s()),
                s.notes.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io("<summary>", e))
    }
}

/// Incremental corpus statistics, fed either from disk or from in-memory
/// tracks.
#[derive(Clone, Debug)]
pub struct StatsAccumulator {
    frame: Histogram,
    note: Histogram,
    note_abs_sum: f64,
    notes: u64,
    ensembles: BTreeMap<Ensemble, EnsembleStats>,
}

impl StatsAccumulator {
    pub fn new(bin_width: f64) -> Self {
        StatsAccumulator {
            frame: Histogram::new(-0.5, 0.5, bin_width),
            note: Histogram::new(0.0, 0.5, bin_width),
            note_abs_sum: 0.0,
            notes: 0,
            ensembles: BTreeMap::new(),
        }
    }

    /// Adds one track given its metadata and per-stem synthesis parameters.
    pub fn add_track(&mut self, meta: &TrackMetadata, params: &[SynthesisParams]) {
        let e = self.ensembles.entry(meta.ensemble).or_default();
        e.tracks += 1;
        e.total_duration_s += meta.duration_s;
        for (stem, p) in meta.stems.iter().zip(params) {
            e.notes += stem.notes.len();
            for (f0, amp) in p.f0.iter().zip(&p.amplitude) {
                if *amp > 0.0 {
                    self.frame.add(f0 - f0.round());
                }
            }
            for r in &stem.notes {
                let (start, end) = frame_span(r.note.onset_s, r.note.offset_s, p.layout.frame_rate);
                let end = end.min(p.num_frames());
                if start >= end {
                    continue;
                }
                let mean = p.f0[start..end].iter().sum::<f64>() / (end - start) as f64;
                let dev = (mean - f64::from(r.note.pitch)).abs();
                self.note.add(dev);
                self.note_abs_sum += dev;
                self.notes += 1;
            }
        }
    }

    pub fn merge(mut self, other: StatsAccumulator) -> Self {
        self.frame.merge(&other.frame);
        self.note.merge(&other.note);
        self.note_abs_sum += other.note_abs_sum;
        self.notes += other.notes;
        for (k, v) in other.ensembles {
            let e = self.ensembles.entry(k).or_default();
            e.tracks += v.tracks;
            e.total_duration_s += v.total_duration_s;
            e.notes += v.notes;
        }
        self
    }

    pub fn finish(self, unreadable: Vec<(PathBuf, String)>) -> CorpusStats {
        CorpusStats {
            voiced_frames: self.frame.total(),
            frame_deviation: self.frame,
            note_mean_abs_deviation: self.note,
            notes: self.notes,
            mean_note_abs_deviation: if self.notes == 0 { 0.0 } else { self.note_abs_sum / self.notes as f64 },
            ensembles: self.ensembles,
            unreadable,
        }
    }
}

fn load_track(dir: &Path) -> Result<(TrackMetadata, Vec<SynthesisParams>)> {
    let meta = read_metadata(dir)?;
    let params = meta
        .stems
        .iter()
        .map(|s| read_synth_params_csv(&dir.join("synth_params").join(format!("{}.csv", stem_name(s.part))), meta.frame_rate))
        .collect::<Result<Vec<_>>>()?;
    Ok((meta, params))
}

/// Reads every track under `root`; tracks that cannot be read are listed in
/// the result instead of aborting.
pub fn run_stats(root: &Path, bin_width: f64) -> Result<CorpusStats> {
    if !(bin_width > 0.0 && bin_width <= 0.5) {
        return Err(Error::InvalidConfig(format!("bin width {bin_width} must be in (0, 0.5]")));
    }
    let dirs = list_tracks(root)?;
    let parts: Vec<std::result::Result<StatsAccumulator, (PathBuf, String)>> = dirs
        .par_iter()
        .map(|d| {
            let (meta, params) = load_track(d).map_err(|e| (d.clone(), e.to_string()))?;
            let mut acc = StatsAccumulator::new(bin_width);
            acc.add_track(&meta, &params);
            Ok(acc)
        })
        .collect();
    let mut acc = StatsAccumulator::new(bin_width);
    let mut unreadable = Vec::new();
    for p in parts {
        match p {
            Ok(a) => acc = acc.merge(a),
            Err(u) => unreadable.push(u),
        }
    }
    Ok(acc.finish(unreadable))
}
