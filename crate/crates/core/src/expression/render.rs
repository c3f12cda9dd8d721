use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::NoteExpression;
use crate::augment::PerformanceNote;
use crate::error::{Error, Result};

/// Frame rate and per-frame vector sizes shared by rendering and synthesis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameLayout {
    pub frame_rate: f64,
    pub num_harmonics: usize,
    pub num_noise_bands: usize,
}

impl Default for FrameLayout {
    fn default() -> Self {
        FrameLayout { frame_rate: 250.0, num_harmonics: 64, num_noise_bands: 65 }
    }
}

impl FrameLayout {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_rate > 0.0 && self.frame_rate.is_finite()) {
            return Err(Error::NonPositiveFrameRate(self.frame_rate));
        }
        if self.num_harmonics < 1 || self.num_noise_bands < 2 {
            return Err(Error::InvalidConfig("need at least 1 harmonic and 2 noise bands".into()));
        }
        Ok(())
    }
}

/// Constants of the rule-based expression renderer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    pub vibrato_rate_hz: f64,
    /// Vibrato depth in semitones at `vibrato = 1`.
    pub vibrato_max_depth: f64,
    /// Vibrato starts after this fraction of the note.
    pub vibrato_delay: f64,
    /// Peak amplitude in dB at `volume = 0`; `volume = 1` peaks at 0 dB.
    pub volume_floor_db: f64,
    /// Envelope level at the note edges relative to the apex.
    pub envelope_base: f64,
    pub attack_s: f64,
    pub release_s: f64,
    pub fluctuation_rate_hz: f64,
    /// Relative modulation depth at `volume_fluctuation = 1`.
    pub fluctuation_max_depth: f64,
    /// Noise magnitude present throughout a note, relative to its amplitude.
    pub noise_floor: f64,
    /// Additional onset noise at `attack_noise = 1`.
    pub attack_noise_gain: f64,
    pub attack_noise_window_s: f64,
    /// Linear fade applied at both ends of every note.
    pub crossfade_s: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            vibrato_rate_hz: 5.5,
            vibrato_max_depth: 0.5,
            vibrato_delay: 0.25,
            volume_floor_db: -24.0,
            envelope_base: 0.6,
            attack_s: 0.02,
            release_s: 0.03,
            fluctuation_rate_hz: 4.0,
            fluctuation_max_depth: 0.3,
            noise_floor: 0.01,
            attack_noise_gain: 0.5,
            attack_noise_window_s: 0.08,
            crossfade_s: 0.01,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            self.vibrato_rate_hz,
            self.vibrato_max_depth,
            self.attack_s,
            self.release_s,
            self.fluctuation_rate_hz,
            self.noise_floor,
            self.attack_noise_gain,
            self.crossfade_s,
        ];
        if nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite()))
            || !(0.0..=1.0).contains(&self.vibrato_delay)
            || !(0.0..=1.0).contains(&self.envelope_base)
            || !(0.0..1.0).contains(&self.fluctuation_max_depth)
            || !(self.attack_noise_window_s > 0.0)
            || !(self.volume_floor_db <= 0.0)
        {
            return Err(Error::InvalidConfig("render constants out of range".into()));
        }
        Ok(())
    }
}

/// Frame indices `[ceil(onset·fr), ceil(offset·fr))` covered by a note.
pub fn frame_span(onset_s: f64, offset_s: f64, frame_rate: f64) -> (usize, usize) {
    let start = (onset_s * frame_rate).ceil().max(0.0) as usize;
    let end = (offset_s * frame_rate).ceil().max(0.0) as usize;
    (start, end.max(start))
}

/// Framewise synthesis controls. Matrices are row-major, one row per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisParams {
    pub layout: FrameLayout,
    /// Fractional MIDI pitch per frame.
    pub f0: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub harmonics: Vec<f64>,
    pub noise: Vec<f64>,
}

impl SynthesisParams {
    pub fn silent(layout: FrameLayout, frames: usize, f0: f64) -> Self {
        let mut harmonics = vec![0.0; frames * layout.num_harmonics];
        for row in harmonics.chunks_exact_mut(layout.num_harmonics) {
            row[0] = 1.0;
        }
        SynthesisParams {
            layout,
            f0: vec![f0; frames],
            amplitude: vec![0.0; frames],
            harmonics,
            noise: vec![0.0; frames * layout.num_noise_bands],
        }
    }

    pub fn num_frames(&self) -> usize {
        self.f0.len()
    }

    pub fn duration_s(&self) -> f64 {
        self.num_frames() as f64 / self.layout.frame_rate
    }

    pub fn harmonic_frame(&self, i: usize) -> &[f64] {
        let k = self.layout.num_harmonics;
        &self.harmonics[i * k..(i + 1) * k]
    }

    pub fn noise_frame(&self, i: usize) -> &[f64] {
        let b = self.layout.num_noise_bands;
        &self.noise[i * b..(i + 1) * b]
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        let n = self.num_frames();
        if self.amplitude.len() != n
            || self.harmonics.len() != n * self.layout.num_harmonics
            || self.noise.len() != n * self.layout.num_noise_bands
        {
            return Err(Error::LengthMismatch);
        }
        if let Some(a) = self.amplitude.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(Error::ContractViolation(format!("amplitude {a} is not a finite nonnegative gain")));
        }
        if let Some(f) = self.f0.iter().find(|f| !f.is_finite()) {
            return Err(Error::ContractViolation(format!("f0 {f} is not finite")));
        }
        if let Some(m) = self.noise.iter().find(|m| !(**m >= 0.0)) {
            return Err(Error::NegativeMagnitude(*m));
        }
        for i in 0..n {
            let row = self.harmonic_frame(i);
            let sum: f64 = row.iter().sum();
            if row.iter().any(|c| !(*c >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
                return Err(Error::ContractViolation(format!("harmonic distribution at frame {i} sums to {sum}")));
            }
        }
        Ok(())
    }
}

/// A rendered note: synthesis parameters starting at an absolute frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub start_frame: usize,
    pub params: SynthesisParams,
}

impl Segment {
    pub fn end_frame(&self) -> usize {
        self.start_frame + self.params.num_frames()
    }
}

/// Harmonic weights `k^-(2.5 - 2·brightness)`, normalized to sum to 1.
fn harmonic_distribution(brightness: f64, k: usize) -> Vec<f64> {
    let slope = 2.5 - 2.0 * brightness;
    let mut w: Vec<f64> = (1..=k).map(|h| (h as f64).powf(-slope)).collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    w
}

/// Weighted mean harmonic number of a distribution.
pub fn spectral_centroid(distribution: &[f64]) -> f64 {
    let total: f64 = distribution.iter().sum();
    distribution.iter().enumerate().map(|(i, c)| (i + 1) as f64 * c).sum::<f64>() / total
}

/// Renders one note into framewise parameters over its frame span.
///
/// The f0 track is the note pitch plus delayed sinusoidal vibrato; intonation
/// drift and pitch correction are applied separately.
pub fn render_synthesis_params(
    note: &PerformanceNote,
    expr: &NoteExpression,
    cfg: &RenderConfig,
    layout: FrameLayout,
) -> Result<Segment> {
    layout.validate()?;
    let fr = layout.frame_rate;
    let (start, end) = frame_span(note.onset_s, note.offset_s, fr);
    if start == end {
        return Err(Error::EmptyFrameSpan);
    }
    let dur = note.duration_s();
    let pitch = f64::from(note.pitch);
    let depth = expr.vibrato * cfg.vibrato_max_depth;
    let delay = cfg.vibrato_delay * dur;
    let peak = 10f64.powf(cfg.volume_floor_db * (1.0 - expr.volume) / 20.0);
    let apex = expr.volume_peak_position * dur;
    let reach = apex.max(dur - apex).max(f64::EPSILON);
    let fluct = expr.volume_fluctuation * cfg.fluctuation_max_depth;
    let dist = harmonic_distribution(expr.brightness, layout.num_harmonics);

    let frames = end - start;
    let mut params = SynthesisParams::silent(layout, frames, pitch);
    for j in 0..frames {
        let t = (start + j) as f64 / fr - note.onset_s;
        if t >= delay && depth > 0.0 {
            params.f0[j] = pitch + depth * (2.0 * PI * cfg.vibrato_rate_hz * (t - delay)).sin();
        }
        let shape = cfg.envelope_base + (1.0 - cfg.envelope_base) * (1.0 - (t - apex).abs() / reach);
        let attack = if cfg.attack_s > 0.0 { (t / cfg.attack_s).min(1.0) } else { 1.0 };
        let release = if cfg.release_s > 0.0 { ((dur - t) / cfg.release_s).clamp(0.0, 1.0) } else { 1.0 };
        let lfo = 1.0 + fluct * (2.0 * PI * cfg.fluctuation_rate_hz * t).sin();
        let amp = (peak * shape * attack * release * lfo).max(0.0);
        params.amplitude[j] = amp;
        params.harmonics[j * layout.num_harmonics..(j + 1) * layout.num_harmonics].copy_from_slice(&dist);
        let burst = (1.0 - t / cfg.attack_noise_window_s).max(0.0);
        let level = amp * (cfg.noise_floor + expr.attack_noise * cfg.attack_noise_gain * burst);
        params.noise[j * layout.num_noise_bands..(j + 1) * layout.num_noise_bands].fill(level);
    }
    Ok(Segment { start_frame: start, params })
}

/// Places note segments on a stem-length frame grid.
///
/// Gaps are silent and hold the previous f0 (the first note's f0 before it).
/// Each note fades in and out linearly over `crossfade_s`, so adjacent notes
/// crossfade at their shared boundary.
pub fn stitch_note_segments(
    segments: &[Segment],
    total_frames: usize,
    layout: FrameLayout,
    crossfade_s: f64,
) -> Result<SynthesisParams> {
    layout.validate()?;
    let (k, b) = (layout.num_harmonics, layout.num_noise_bands);
    let mut prev_end = 0;
    for (i, s) in segments.iter().enumerate() {
        if s.params.layout != layout {
            return Err(Error::LengthMismatch);
        }
        if i > 0 && s.start_frame < prev_end {
            return Err(Error::OverlappingSegments { start: s.start_frame, previous_end: prev_end });
        }
        prev_end = s.end_frame();
    }
    if prev_end > total_frames {
        return Err(Error::ContractViolation(format!("segments end at frame {prev_end} past the stem end {total_frames}")));
    }
    let initial = segments.first().and_then(|s| s.params.f0.first().copied()).unwrap_or(0.0);
    let mut out = SynthesisParams::silent(layout, total_frames, initial);
    let fade = (crossfade_s * layout.frame_rate).round() as usize;

    let mut cursor = 0;
    for s in segments {
        let held = if cursor == 0 { initial } else { out.f0[cursor - 1] };
        let last_row = cursor.checked_sub(1).map(|c| out.harmonic_frame(c).to_vec());
        for j in cursor..s.start_frame {
            out.f0[j] = held;
            if let Some(row) = &last_row {
                out.harmonics[j * k..(j + 1) * k].copy_from_slice(row);
            }
        }
        let p = &s.params;
        let n = p.num_frames();
        let f = fade.min(n / 2);
        for j in 0..n {
            let gain = if j < f {
                (j + 1) as f64 / (f + 1) as f64
            } else if j >= n - f {
                (n - j) as f64 / (f + 1) as f64
            } else {
                1.0
            };
            let dst = s.start_frame + j;
            out.f0[dst] = p.f0[j];
            out.amplitude[dst] = p.amplitude[j] * gain;
            out.harmonics[dst * k..(dst + 1) * k].copy_from_slice(p.harmonic_frame(j));
            for (o, m) in out.noise[dst * b..(dst + 1) * b].iter_mut().zip(p.noise_frame(j)) {
                *o = m * gain;
            }
        }
        cursor = s.end_frame();
    }
    if cursor > 0 {
        let held = out.f0[cursor - 1];
        let row = out.harmonic_frame(cursor - 1).to_vec();
        for j in cursor..total_frames {
            out.f0[j] = held;
            out.harmonics[j * k..(j + 1) * k].copy_from_slice(&row);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::Instrument;
    use crate::score::Voice;
    use proptest::prelude::*;

    fn note(pitch: u8, onset: f64, offset: f64) -> PerformanceNote {
        PerformanceNote {
            part: Voice::Alto,
            instrument: Instrument::Viola,
            pitch,
            onset_s: onset,
            offset_s: offset,
            quantized_onset_step: 0,
            quantized_duration_steps: 1,
            timing_offset_s: 0.0,
        }
    }

    fn expr(values: [f64; 6]) -> NoteExpression {
        NoteExpression::from_array(values)
    }

    #[test]
    fn frame_span_rounds_up_both_ends() {
        assert_eq!(frame_span(1.0, 2.0, 250.0), (250, 500));
        assert_eq!(frame_span(0.0011, 0.0081, 250.0), (1, 3));
        let (_, a_end) = frame_span(0.3, 0.7073, 250.0);
        let (b_start, _) = frame_span(0.7073, 1.2, 250.0);
        assert_eq!(a_end, b_start);
    }

    #[test]
    fn no_vibrato_means_constant_f0() {
        let seg = render_synthesis_params(
            &note(67, 0.5, 1.5),
            &expr([0.5, 0.5, 0.5, 0.0, 0.5, 0.5]),
            &RenderConfig::default(),
            FrameLayout::default(),
        )
        .unwrap();
        assert_eq!(seg.start_frame, 125);
        assert_eq!(seg.params.num_frames(), 250);
        assert!(seg.params.f0.iter().all(|&f| f == 67.0));
    }

    #[test]
    fn vibrato_depth_and_delay() {
        let cfg = RenderConfig::default();
        let seg = render_synthesis_params(&note(60, 0.0, 2.0), &expr([0.5, 0.0, 0.5, 1.0, 0.5, 0.0]), &cfg, FrameLayout::default())
            .unwrap();
        let f0 = &seg.params.f0;
        assert!(f0[..125].iter().all(|&f| f == 60.0));
        let max = f0.iter().cloned().fold(f64::MIN, f64::max);
        let min = f0.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - 60.5).abs() < 0.01 && (min - 59.5).abs() < 0.01);
    }

    #[test]
    fn envelope_apex_follows_peak_position() {
        let layout = FrameLayout::default();
        for pos in [0.2, 0.5, 0.8] {
            let seg =
                render_synthesis_params(&note(60, 0.0, 2.0), &expr([1.0, 0.0, pos, 0.0, 0.5, 0.0]), &RenderConfig::default(), layout)
                    .unwrap();
            let a = &seg.params.amplitude;
            let argmax = (0..a.len()).max_by(|&i, &j| a[i].total_cmp(&a[j])).unwrap();
            assert!((argmax as f64 / layout.frame_rate - pos * 2.0).abs() <= 1.0 / layout.frame_rate);
            assert!((a[argmax] - 1.0).abs() < 1e-2);
        }
    }

    #[test]
    fn volume_sets_peak() {
        let layout = FrameLayout::default();
        let peak = |v| {
            let seg = render_synthesis_params(&note(60, 0.0, 1.0), &expr([v, 0.0, 0.5, 0.0, 0.5, 0.0]), &RenderConfig::default(), layout)
                .unwrap();
            seg.params.amplitude.iter().cloned().fold(0.0, f64::max)
        };
        assert!(peak(0.2) < peak(0.5) && peak(0.5) < peak(0.9));
        assert!((20.0 * peak(0.0).log10() + 24.0).abs() < 0.1);
    }

    #[test]
    fn fluctuation_adds_modulation() {
        let layout = FrameLayout::default();
        let render = |vf| {
            render_synthesis_params(&note(60, 0.0, 2.0), &expr([0.7, vf, 0.5, 0.0, 0.5, 0.0]), &RenderConfig::default(), layout)
                .unwrap()
                .params
                .amplitude
        };
        let (flat, wobbly) = (render(0.0), render(1.0));
        let diff = flat.iter().zip(&wobbly).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff > 0.1);
    }

    #[test]
    fn attack_noise_off_leaves_only_the_floor() {
        let cfg = RenderConfig::default();
        let layout = FrameLayout::default();
        let seg = render_synthesis_params(&note(60, 0.0, 1.0), &expr([0.7, 0.3, 0.5, 0.4, 0.5, 0.0]), &cfg, layout).unwrap();
        for j in 0..seg.params.num_frames() {
            let floor = seg.params.amplitude[j] * cfg.noise_floor;
            assert!(seg.params.noise_frame(j).iter().all(|&m| (m - floor).abs() < 1e-15));
        }
        let loud = render_synthesis_params(&note(60, 0.0, 1.0), &expr([0.7, 0.3, 0.5, 0.4, 0.5, 1.0]), &cfg, layout).unwrap();
        assert!(loud.params.noise_frame(5)[0] > 10.0 * seg.params.noise_frame(5)[0]);
        assert_eq!(loud.params.noise_frame(100), seg.params.noise_frame(100));
    }

    #[test]
    fn brightness_raises_centroid() {
        // Direct summation oracle, independent of spectral_centroid.
        let centroid = |b: f64| {
            let w: Vec<f64> = (1..=64).map(|k| (k as f64).powf(2.0 * b - 2.5)).collect();
            let s: f64 = w.iter().sum();
            w.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x / s).sum::<f64>()
        };
        let layout = FrameLayout::default();
        let mut last = 0.0;
        for b in [0.1, 0.5, 0.9] {
            let seg = render_synthesis_params(&note(60, 0.0, 0.2), &expr([0.5, 0.0, 0.5, 0.0, b, 0.0]), &RenderConfig::default(), layout)
                .unwrap();
            let c = spectral_centroid(seg.params.harmonic_frame(0));
            assert!((c - centroid(b)).abs() < 1e-9);
            assert!(c > last);
            last = c;
        }
    }

    #[test]
    fn zero_frame_rate_is_an_error() {
        let layout = FrameLayout { frame_rate: 0.0, ..Default::default() };
        let r = render_synthesis_params(&note(60, 0.0, 1.0), &expr([0.5; 6]), &RenderConfig::default(), layout);
        assert!(matches!(r, Err(Error::NonPositiveFrameRate(_))));
    }

    #[test]
    fn single_segment_is_padded() {
        let layout = FrameLayout::default();
        let seg = render_synthesis_params(&note(62, 0.4, 1.0), &expr([0.5; 6]), &RenderConfig::default(), layout).unwrap();
        let out = stitch_note_segments(std::slice::from_ref(&seg), 500, layout, 0.0).unwrap();
        assert_eq!(out.num_frames(), 500);
        assert_eq!(&out.amplitude[100..250], &seg.params.amplitude[..]);
        assert_eq!(&out.f0[100..250], &seg.params.f0[..]);
        assert!(out.amplitude[..100].iter().chain(&out.amplitude[250..]).all(|&a| a == 0.0));
        assert!(out.f0[250..].iter().all(|&f| f == seg.params.f0[149]));
        out.validate().unwrap();
    }

    #[test]
    fn gap_is_silent_and_holds_pitch() {
        let layout = FrameLayout::default();
        let cfg = RenderConfig::default();
        let a = render_synthesis_params(&note(60, 0.0, 1.0), &expr([0.5; 6]), &cfg, layout).unwrap();
        let b = render_synthesis_params(&note(64, 2.0, 3.0), &expr([0.5; 6]), &cfg, layout).unwrap();
        let out = stitch_note_segments(&[a.clone(), b], 750, layout, cfg.crossfade_s).unwrap();
        assert!(out.amplitude[250..500].iter().all(|&x| x == 0.0));
        assert!(out.noise[250 * 65..500 * 65].iter().all(|&x| x == 0.0));
        assert!(out.f0[250..500].iter().all(|&f| f == a.params.f0[249]));
        // Fades touch only the note edges.
        assert!(out.amplitude[0] < a.params.amplitude[0] || a.params.amplitude[0] == 0.0);
        assert_eq!(out.amplitude[10], a.params.amplitude[10]);
    }

    #[test]
    fn overlap_is_an_error() {
        let layout = FrameLayout::default();
        let cfg = RenderConfig::default();
        let a = render_synthesis_params(&note(60, 0.0, 1.0), &expr([0.5; 6]), &cfg, layout).unwrap();
        let b = render_synthesis_params(&note(64, 0.9, 2.0), &expr([0.5; 6]), &cfg, layout).unwrap();
        assert!(matches!(
            stitch_note_segments(&[a, b], 600, layout, 0.01),
            Err(Error::OverlappingSegments { start: 225, previous_end: 250 })
        ));
    }

    proptest! {
        #[test]
        fn rendered_frames_are_valid(
            values in proptest::array::uniform6(0.0f64..=1.0),
            onset in 0.0f64..5.0,
            dur in 0.02f64..3.0,
            pitch in 30u8..100,
        ) {
            let seg = render_synthesis_params(&note(pitch, onset, onset + dur), &expr(values), &RenderConfig::default(), FrameLayout::default())
                .unwrap();
            prop_assert_eq!(seg.end_frame(), (((onset + dur) * 250.0).ceil()) as usize);
            seg.params.validate().unwrap();
        }
    }
}
