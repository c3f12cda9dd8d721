use std::path::Path;

use serde::{Deserialize, Serialize};

use super::NoteRecord;
use crate::error::{Error, Result};
use crate::expression::{FrameLayout, NoteExpression, SynthesisParams};
use crate::synth::midi_to_hz;

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

/// One row of an expression table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpressionRow {
    pub note_index: usize,
    pub pitch: u8,
    pub onset_s: f64,
    pub offset_s: f64,
    pub volume: f64,
    pub volume_fluctuation: f64,
    pub volume_peak_position: f64,
    pub vibrato: f64,
    pub brightness: f64,
    pub attack_noise: f64,
}

impl ExpressionRow {
    pub fn expression(&self) -> NoteExpression {
        NoteExpression {
            volume: self.volume,
            volume_fluctuation: self.volume_fluctuation,
            volume_peak_position: self.volume_peak_position,
            vibrato: self.vibrato,
            brightness: self.brightness,
            attack_noise: self.attack_noise,
        }
    }
}

pub fn write_expression_csv(path: &Path, notes: &[NoteRecord]) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    for (i, r) in notes.iter().enumerate() {
        let e = r.expression;
        w.serialize(ExpressionRow {
            note_index: i,
            pitch: r.note.pitch,
            onset_s: r.note.onset_s,
            offset_s: r.note.offset_s,
            volume: e.volume,
            volume_fluctuation: e.volume_fluctuation,
            volume_peak_position: e.volume_peak_position,
            vibrato: e.vibrato,
            brightness: e.brightness,
            attack_noise: e.attack_noise,
        })
        .map_err(&err)?;
    }
    if notes.is_empty() {
        // Keep the header so an empty table is still self-describing.
        w.write_record(["note_index", "pitch", "onset_s", "offset_s"].iter().chain(NoteExpression::FIELDS.iter()))
            .map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_expression_csv(path: &Path) -> Result<Vec<ExpressionRow>> {
    let err = csv_err(path);
    let mut r = csv::Reader::from_path(path).map_err(&err)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(&err)
}

/// Columns: `time_s, f0_semitones, f0_hz, amplitude, harmonic_1..K,
/// noise_1..B`, one row per frame.
pub fn write_synth_params_csv(path: &Path, p: &SynthesisParams) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    let (k, b) = (p.layout.num_harmonics, p.layout.num_noise_bands);
    let mut header: Vec<String> = ["time_s", "f0_semitones", "f0_hz", "amplitude"].map(String::from).to_vec();
    header.extend((1..=k).map(|i| format!("harmonic_{i}")));
    header.extend((1..=b).map(|i| format!("noise_{i}")));
    w.write_record(&header).map_err(&err)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..p.num_frames() {
        row.clear();
        row.push((i as f64 / p.layout.frame_rate).to_string());
        row.push(p.f0[i].to_string());
        row.push(midi_to_hz(p.f0[i]).to_string());
        row.push(p.amplitude[i].to_string());
        row.extend(p.harmonic_frame(i).iter().map(f64::to_string));
        row.extend(p.noise_frame(i).iter().map(f64::to_string));
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_synth_params_csv(path: &Path, frame_rate: f64) -> Result<SynthesisParams> {
    let err = csv_err(path);
    let mut r = csv::Reader::from_path(path).map_err(&err)?;
    let header = r.headers().map_err(&err)?.clone();
    let k = header.iter().filter(|h| h.starts_with("harmonic_")).count();
    let b = header.iter().filter(|h| h.starts_with("noise_")).count();
    if header.len() != 4 + k + b || &header[1] != "f0_semitones" || &header[3] != "amplitude" {
        return Err(Error::InvalidBundle(format!("{}: unexpected synthesis-parameter columns", path.display())));
    }
    let layout = FrameLayout { frame_rate, num_harmonics: k, num_noise_bands: b };
    let mut p = SynthesisParams::silent(layout, 0, 0.0);
    p.harmonics.clear();
    let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::InvalidBundle(format!("{}: {e}", path.display())));
    for rec in r.records() {
        let rec = rec.map_err(&err)?;
        p.f0.push(parse(&rec[1])?);
        p.amplitude.push(parse(&rec[3])?);
        for j in 0..k {
            p.harmonics.push(parse(&rec[4 + j])?);
        }
        for j in 0..b {
            p.noise.push(parse(&rec[4 + k + j])?);
        }
    }
    Ok(p)
}
