//! Minimal Standard MIDI File codec.
//!
//! The writer emits format-0 files with a single track holding one tempo
//! meta-event, a 4/4 time signature, one program change and the note events.
//! The reader handles formats 0 and 1 with running status, meta and sysex
//! events, which covers what the generator writes and typical external scores.

use crate::error::{Error, Result};

pub const DEFAULT_PPQN: u16 = 220;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventKind {
    NoteOn { channel: u8, pitch: u8, velocity: u8 },
    NoteOff { channel: u8, pitch: u8 },
    ProgramChange { channel: u8, program: u8 },
    /// Microseconds per quarter note.
    Tempo(u32),
    EndOfTrack,
    Meta { kind: u8, data: Vec<u8> },
    Other,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    /// Absolute time in ticks.
    pub tick: u64,
    pub kind: EventKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MidiNote {
    pub track: usize,
    pub channel: u8,
    pub pitch: u8,
    pub velocity: u8,
    pub start_tick: u64,
    pub end_tick: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Smf {
    pub format: u16,
    pub ppqn: u16,
    pub tracks: Vec<Vec<Event>>,
}

/// A note to be written, in ticks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoteSpan {
    pub pitch: u8,
    pub velocity: u8,
    pub start_tick: u64,
    pub end_tick: u64,
}

pub fn tempo_micros(bpm: u32) -> u32 {
    (60_000_000 + bpm / 2) / bpm
}

fn push_vlq(out: &mut Vec<u8>, mut value: u64) {
    let mut stack = [0u8; 10];
    let mut n = 0;
    loop {
        stack[n] = (value & 0x7f) as u8;
        n += 1;
        value >>= 7;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        out.push(if i > 0 { stack[i] | 0x80 } else { stack[i] });
    }
}

/// Encodes a monophonic single-track file.
pub fn write_monophonic(notes: &[NoteSpan], bpm: u32, ppqn: u16, program: u8, name: &str) -> Vec<u8> {
    let mut body = Vec::new();
    let meta = |body: &mut Vec<u8>, kind: u8, data: &[u8]| {
        body.push(0);
        body.extend_from_slice(&[0xff, kind]);
        push_vlq(body, data.len() as u64);
        body.extend_from_slice(data);
    };
    meta(&mut body, 0x03, name.as_bytes());
    meta(&mut body, 0x51, &tempo_micros(bpm).to_be_bytes()[1..]);
    meta(&mut body, 0x58, &[4, 2, 24, 8]);
    body.extend_from_slice(&[0, 0xc0, program & 0x7f]);

    // Offs sort before ons at equal ticks so back-to-back repeats stay distinct.
    let mut events: Vec<(u64, u8, u8, u8)> = Vec::with_capacity(notes.len() * 2);
    for n in notes {
        events.push((n.start_tick, 1, n.pitch, n.velocity.clamp(1, 127)));
        events.push((n.end_tick, 0, n.pitch, 0));
    }
    events.sort_by_key(|&(tick, on, _, _)| (tick, on));
    let mut now = 0;
    for (tick, on, pitch, velocity) in events {
        push_vlq(&mut body, tick - now);
        now = tick;
        if on == 1 {
            body.extend_from_slice(&[0x90, pitch, velocity]);
        } else {
            body.extend_from_slice(&[0x80, pitch, 0]);
        }
    }
    body.extend_from_slice(&[0, 0xff, 0x2f, 0]);

    let mut out = Vec::with_capacity(body.len() + 22);
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&ppqn.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| Error::Midi("unexpected end of data".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u64> {
        let mut value = 0u64;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u64::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(Error::Midi("variable-length quantity longer than 4 bytes".into()))
    }

    fn done(&self) -> bool {
        self.pos >= self.bytes.len()
    }
}

impl Smf {
    pub fn parse(bytes: &[u8]) -> Result<Smf> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != b"MThd" {
            return Err(Error::Midi("missing MThd header".into()));
        }
        let header_len = r.u32()? as usize;
        if header_len < 6 {
            return Err(Error::Midi("short MThd header".into()));
        }
        let format = r.u16()?;
        let ntracks = r.u16()?;
        let division = r.u16()?;
        r.take(header_len - 6)?;
        if division & 0x8000 != 0 {
            return Err(Error::Midi("SMPTE time division is not supported".into()));
        }
        if format > 1 {
            return Err(Error::Midi(format!("format {format} is not supported")));
        }

        let mut tracks = Vec::with_capacity(usize::from(ntracks));
        while tracks.len() < usize::from(ntracks) {
            let id = r.take(4)?;
            let len = r.u32()? as usize;
            let chunk = r.take(len)?;
            if id == b"MTrk" {
                tracks.push(parse_track(chunk)?);
            }
        }
        Ok(Smf { format, ppqn: division, tracks })
    }

    /// Pairs note-ons with note-offs (first in, first out per channel and pitch).
    pub fn notes(&self) -> Vec<MidiNote> {
        let mut notes = Vec::new();
        for (track, events) in self.tracks.iter().enumerate() {
            let mut open: Vec<(u8, u8, u8, u64)> = Vec::new();
            for e in events {
                match e.kind {
                    EventKind::NoteOn { channel, pitch, velocity } => open.push((channel, pitch, velocity, e.tick)),
                    EventKind::NoteOff { channel, pitch } => {
                        if let Some(i) = open.iter().position(|o| o.0 == channel && o.1 == pitch) {
                            let (channel, pitch, velocity, start_tick) = open.remove(i);
                            notes.push(MidiNote { track, channel, pitch, velocity, start_tick, end_tick: e.tick });
                        }
                    }
                    _ => {}
                }
            }
        }
        notes.sort_by_key(|n| (n.track, n.start_tick, n.pitch));
        notes
    }

    /// Tempo changes as `(tick, microseconds per quarter)`, sorted by tick.
    pub fn tempo_map(&self) -> Vec<(u64, u32)> {
        let mut map: Vec<(u64, u32)> = self
            .tracks
            .iter()
            .flatten()
            .filter_map(|e| match e.kind {
                EventKind::Tempo(t) => Some((e.tick, t)),
                _ => None,
            })
            .collect();
        map.sort_by_key(|&(tick, _)| tick);
        map
    }

    pub fn tick_to_seconds(&self, tick: u64) -> f64 {
        let mut seconds = 0.0;
        let mut last_tick = 0;
        let mut tempo = 500_000u32;
        for (t, micros) in self.tempo_map() {
            if t >= tick {
                break;
            }
            seconds += (t - last_tick) as f64 * f64::from(tempo) / 1e6 / f64::from(self.ppqn);
            last_tick = t;
            tempo = micros;
        }
        seconds + (tick - last_tick) as f64 * f64::from(tempo) / 1e6 / f64::from(self.ppqn)
    }

    pub fn end_tick(&self) -> u64 {
        self.tracks.iter().flatten().map(|e| e.tick).max().unwrap_or(0)
    }
}

fn parse_track(chunk: &[u8]) -> Result<Vec<Event>> {
    let mut r = Reader { bytes: chunk, pos: 0 };
    let mut events = Vec::new();
    let mut tick = 0u64;
    let mut running: Option<u8> = None;
    while !r.done() {
        tick += r.vlq()?;
        let mut status = r.u8()?;
        let mut first_data = None;
        if status < 0x80 {
            first_data = Some(status);
            status = running.ok_or_else(|| Error::Midi("running status without a previous status byte".into()))?;
        }
        let kind = match status {
            0xff => {
                let kind = r.u8()?;
                let len = r.vlq()? as usize;
                let data = r.take(len)?.to_vec();
                match kind {
                    0x51 if data.len() == 3 => EventKind::Tempo(u32::from_be_bytes([0, data[0], data[1], data[2]])),
                    0x2f => EventKind::EndOfTrack,
                    _ => EventKind::Meta { kind, data },
                }
            }
            0xf0 | 0xf7 => {
                let len = r.vlq()? as usize;
                r.take(len)?;
                EventKind::Other
            }
            0x80..=0xef => {
                running = Some(status);
                let channel = status & 0x0f;
                let a = match first_data {
                    Some(a) => a,
                    None => r.u8()?,
                };
                match status & 0xf0 {
                    0xc0 => EventKind::ProgramChange { channel, program: a },
                    0xd0 => EventKind::Other,
                    0x80 => {
                        r.u8()?;
                        EventKind::NoteOff { channel, pitch: a }
                    }
                    0x90 => {
                        let velocity = r.u8()?;
                        if velocity == 0 {
                            EventKind::NoteOff { channel, pitch: a }
                        } else {
                            EventKind::NoteOn { channel, pitch: a, velocity }
                        }
                    }
                    _ => {
                        r.u8()?;
                        EventKind::Other
                    }
                }
            }
            _ => return Err(Error::Midi(format!("unexpected status byte {status:#04x}"))),
        };
        let end = kind == EventKind::EndOfTrack;
        events.push(Event { tick, kind });
        if end {
            break;
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vlq_encoding_matches_reference_values() {
        for (value, bytes) in [
            (0u64, vec![0x00]),
            (0x40, vec![0x40]),
            (0x7f, vec![0x7f]),
            (0x80, vec![0x81, 0x00]),
            (0x2000, vec![0xc0, 0x00]),
            (0x3fff, vec![0xff, 0x7f]),
            (0x0fff_ffff, vec![0xff, 0xff, 0xff, 0x7f]),
        ] {
            let mut out = Vec::new();
            push_vlq(&mut out, value);
            assert_eq!(out, bytes, "{value:#x}");
            assert_eq!(Reader { bytes: &out, pos: 0 }.vlq().unwrap(), value);
        }
    }

    #[test]
    fn written_file_reads_back() {
        let notes = [
            NoteSpan { pitch: 60, velocity: 80, start_tick: 0, end_tick: 165 },
            NoteSpan { pitch: 60, velocity: 90, start_tick: 165, end_tick: 220 },
            NoteSpan { pitch: 64, velocity: 70, start_tick: 220, end_tick: 7040 },
        ];
        let bytes = write_monophonic(&notes, 120, DEFAULT_PPQN, 40, "soprano");
        let smf = Smf::parse(&bytes).unwrap();
        assert_eq!((smf.format, smf.ppqn, smf.tracks.len()), (0, 220, 1));
        assert_eq!(smf.tempo_map(), vec![(0, 500_000)]);
        let back = smf.notes();
        assert_eq!(back.len(), 3);
        for (n, b) in notes.iter().zip(&back) {
            assert_eq!((b.pitch, b.velocity, b.start_tick, b.end_tick), (n.pitch, n.velocity, n.start_tick, n.end_tick));
        }
        assert!((smf.tick_to_seconds(7040) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn running_status_and_zero_velocity_offs() {
        // One track: note on 60, running-status note on 64, both ended with velocity-0 ons.
        let track = [0x00, 0x90, 60, 100, 0x00, 64, 100, 0x60, 60, 0, 0x00, 64, 0, 0x00, 0xff, 0x2f, 0x00];
        let mut bytes = b"MThd\0\0\0\x06\0\0\0\x01\0\x60MTrk".to_vec();
        bytes.extend_from_slice(&(track.len() as u32).to_be_bytes());
        bytes.extend_from_slice(&track);
        let notes = Smf::parse(&bytes).unwrap().notes();
        assert_eq!(notes.len(), 2);
        assert!(notes.iter().all(|n| n.start_tick == 0 && n.end_tick == 0x60));
    }

    #[test]
    fn rejects_garbage() {
        assert!(Smf::parse(b"RIFF....").is_err());
        assert!(Smf::parse(b"MThd\0\0\0\x06\0\0\0\x01\xe7\x28").is_err());
    }

    #[test]
    fn tempo_rounding() {
        assert_eq!(tempo_micros(120), 500_000);
        assert_eq!(tempo_micros(70), 857_143);
    }
}
