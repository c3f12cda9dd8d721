use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{AudioBuffer, SynthConfig};
use crate::error::{Error, Result};

/// Sample positions before the stem start that the filter may read.
const PREROLL: i64 = 4096;

/// Counter-based white Gaussian noise: the value at a sample index depends
/// only on the seed and the index, never on how much was drawn before.
#[derive(Clone, Debug)]
pub struct NoiseSource {
    seed: u64,
    stem: u64,
}

impl NoiseSource {
    pub fn new(track_seed: u64, stem_index: u64) -> Self {
        NoiseSource { seed: track_seed, stem: stem_index }
    }

    /// Unit-variance samples for indices `start..start + out.len()`.
    pub fn fill(&self, start: i64, out: &mut [f64]) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stem);
        let first = start + PREROLL;
        assert!(first >= 0, "noise requested before the preroll");
        let pair = first as u128 / 2;
        // Two u64 draws (four 32-bit words) per Box-Muller pair.
        rng.set_word_pos(pair * 4);
        let mut idx = pair as i64 * 2;
        let mut i = 0;
        while i < out.len() {
            let u1 = ((rng.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64;
            let u2 = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (2.0 * PI * u2).sin_cos();
            for z in [r * c, r * s] {
                if idx >= first && i < out.len() {
                    out[i] = z;
                    i += 1;
                }
                idx += 1;
            }
        }
    }
}

/// Linear-phase FIR, by frequency sampling, of a band-magnitude envelope.
///
/// Bands are spaced linearly from 0 Hz to Nyquist. The envelope is
/// interpolated onto the FFT grid, made zero-phase, truncated to `taps`
/// with a Hann window and delayed by `taps / 2`.
struct FirDesigner {
    fft_size: usize,
    taps: usize,
    window: Vec<f64>,
    inverse: std::sync::Arc<dyn rustfft::Fft<f64>>,
    forward: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl FirDesigner {
    fn new(fft_size: usize, taps: usize) -> Self {
        let mut planner = FftPlanner::new();
        let window = (0..taps).map(|i| 0.5 - 0.5 * (2.0 * PI * (i + 1) as f64 / (taps + 1) as f64).cos()).collect();
        FirDesigner {
            fft_size,
            taps,
            window,
            inverse: planner.plan_fft_inverse(fft_size),
            forward: planner.plan_fft_forward(fft_size),
        }
    }

    /// Frequency response (full complex spectrum) of the filter.
    fn response(&self, bands: &[f64], buf: &mut [Complex<f64>]) {
        let n = self.fft_size;
        let half = n / 2;
        let last = (bands.len() - 1) as f64;
        for q in 0..=half {
            let x = q as f64 * last / half as f64;
            let j = (x.floor() as usize).min(bands.len() - 2);
            let frac = x - j as f64;
            let m = bands[j] * (1.0 - frac) + bands[j + 1] * frac;
            buf[q] = Complex::new(m, 0.0);
            if q > 0 && q < half {
                buf[n - q] = buf[q];
            }
        }
        self.inverse.process(buf);
        let centre = self.taps / 2;
        let mut h = vec![Complex::new(0.0, 0.0); n];
        for (i, w) in self.window.iter().enumerate() {
            let lag = (i as i64 - centre as i64).rem_euclid(n as i64) as usize;
            h[i] = Complex::new(buf[lag].re / n as f64 * w, 0.0);
        }
        buf.copy_from_slice(&h);
        self.forward.process(buf);
    }
}

/// Filtered noise from framewise band magnitudes.
///
/// One continuous noise stream is shaped by each frame's filter and the
/// results are blended with 50%-overlap Hann windows centred on the frames.
/// The windows sum to one, so a constant envelope yields exactly the
/// stationary filtered noise.
pub fn synthesize_noise(
    magnitudes: &[f64],
    num_bands: usize,
    hop: usize,
    cfg: &SynthConfig,
    source: &NoiseSource,
) -> Result<AudioBuffer> {
    if num_bands < 2 || magnitudes.len() % num_bands != 0 {
        return Err(Error::LengthMismatch);
    }
    if let Some(m) = magnitudes.iter().find(|m| !(**m >= 0.0)) {
        return Err(Error::NegativeMagnitude(*m));
    }
    let frames = magnitudes.len() / num_bands;
    let len = frames * hop;
    let mut out = vec![0.0; len];
    if frames == 0 {
        return Ok(AudioBuffer::new(out, cfg.sample_rate));
    }
    let n = cfg.fft_size;
    let taps = cfg.fir_taps;
    let span = 2 * hop;
    let input_len = span + taps - 1;
    if n < input_len {
        return Err(Error::InvalidConfig(format!("fft_size {n} is smaller than {input_len}")));
    }
    let designer = FirDesigner::new(n, taps);
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let window: Vec<f64> = (0..span).map(|m| 0.5 - 0.5 * (2.0 * PI * m as f64 / span as f64).cos()).collect();
    let mut h = vec![Complex::new(0.0, 0.0); n];
    let mut x = vec![Complex::new(0.0, 0.0); n];
    let mut noise = vec![0.0; input_len];
    let half_tap = (taps / 2) as i64;

    // Window i peaks at the centre of frame i; edge frames are extended.
    for i in -1..=frames as i64 {
        let f = i.clamp(0, frames as i64 - 1) as usize;
        let bands = &magnitudes[f * num_bands..(f + 1) * num_bands];
        if bands.iter().all(|&m| m == 0.0) {
            continue;
        }
        let start = i * hop as i64 - (hop / 2) as i64;
        designer.response(bands, &mut h);
        // y[t] = Σ_m h[m]·e[t + taps/2 - m] for t in the window span.
        source.fill(start + half_tap - (taps as i64 - 1), &mut noise);
        for (dst, &e) in x.iter_mut().zip(&noise) {
            *dst = Complex::new(e, 0.0);
        }
        x[input_len..].fill(Complex::new(0.0, 0.0));
        forward.process(&mut x);
        for (a, b) in x.iter_mut().zip(&h) {
            *a *= b;
        }
        inverse.process(&mut x);
        for (m, w) in window.iter().enumerate() {
            let t = start + m as i64;
            if t >= 0 && (t as usize) < len {
                out[t as usize] += w * x[taps - 1 + m].re / n as f64;
            }
        }
    }
    Ok(AudioBuffer::new(out, cfg.sample_rate))
}
