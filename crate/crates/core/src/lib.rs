//! Deterministic generator of four-part chorale performances with layered
//! annotations.
//!
//! A track is produced in stages, and every intermediate representation is
//! kept alongside the audio:
//!
//! ```text
//! score (pianoroll) -> performance notes -> note expressions
//!     -> framewise synthesis parameters -> stems -> mastered mix
//! ```
//!
//! * [`score`]: four-voice pianorolls, blocked Gibbs sampling over a pluggable
//!   [`score::NoteModel`], and pitch-range rejection.
//! * [`augment`]: tempo, microtiming and orchestration.
//! * [`expression`]: per-note expression controls, their rendering into
//!   synthesis parameters, and note-level pitch correction.
//! * [`synth`]: harmonic-plus-filtered-noise synthesis.
//! * [`mixdown`]: BS.1770-4 integrated loudness, stem normalization and the
//!   peak guard.
//! * [`dataset`]: on-disk layout, WAV/SMF codecs, splits and validation.
//! * [`pipeline`]: configuration, corpus generation and statistics.
//!
//! Everything downstream of the configuration is a pure function of the
//! global seed, so corpora are reproducible regardless of worker count.

pub mod augment;
pub mod dataset;
pub mod error;
pub mod expression;
pub mod mixdown;
pub mod pipeline;
pub mod rng;
pub mod score;
pub mod synth;

pub use error::{Error, Result};
