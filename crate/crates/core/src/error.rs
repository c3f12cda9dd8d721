use std::path::PathBuf;

use thiserror::Error;

use crate::augment::Instrument;
use crate::score::Voice;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("gibbs mask is empty")]
    EmptyMask,

    #[error("cell (voice {voice}, step {step}) is outside the pianoroll")]
    CellOutOfBounds { voice: usize, step: usize },

    #[error("note model violated its contract: {0}")]
    ContractViolation(String),

    #[error("no in-range chorale after {attempts} attempts")]
    RetriesExhausted { attempts: u32 },

    #[error("tempo {0} bpm is outside [1, 1000]")]
    InvalidTempo(u32),

    #[error("instrument pool for {0:?} is empty")]
    EmptyPool(Voice),

    #[error("no expression prior configured for {0:?}")]
    UnknownInstrument(Instrument),

    #[error("frame rate must be positive, got {0}")]
    NonPositiveFrameRate(f64),

    #[error("note spans no frames")]
    EmptyFrameSpan,

    #[error("segment starting at frame {start} overlaps the previous segment ending at frame {previous_end}")]
    OverlappingSegments { start: usize, previous_end: usize },

    #[error("negative fundamental frequency {0} Hz")]
    NegativeF0(f64),

    #[error("negative noise magnitude {0}")]
    NegativeMagnitude(f64),

    #[error("sample rate {sample_rate} is not an integer multiple of frame rate {frame_rate}")]
    NonIntegerHop { sample_rate: u32, frame_rate: f64 },

    #[error("buffer of {samples} samples is shorter than one {block}-sample gating block")]
    BufferTooShort { samples: usize, block: usize },

    #[error("signal is below the absolute gate; loudness is undefined")]
    Silence,

    #[error("buffer lengths or sample rates differ")]
    LengthMismatch,

    #[error("track {0} already exists")]
    TrackExists(PathBuf),

    #[error("invalid track bundle: {0}")]
    InvalidBundle(String),

    #[error("malformed WAV file: {0}")]
    Wav(String),

    #[error("malformed MIDI file: {0}")]
    Midi(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
