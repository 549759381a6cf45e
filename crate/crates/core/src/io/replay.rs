//! Replay logs: JSON lines with a header, periodic state hashes, optional
//! full snapshots, transmission events and an end trailer.
//!
//! ```text
//! {"kind":"header","format_version":1,"mode":"full","seed":7,"hash_interval":100,"config":"<toml>"}
//! {"kind":"hash","step":0,"hash":"9a3c..."}
//! {"kind":"frame","step":0,"snapshot":"<base64>"}
//! {"kind":"event","record":{...}}
//! {"kind":"end","step":1000,"hash":"51e0..."}
//! ```

use std::io::{BufRead, Write};

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{config_to_string, parse_config, ConfigError, RecordMode, RunConfig};
use crate::engine::{fnv1a, load_snapshot, save_snapshot, state_hash, Observer, ObserverFailure, StepReport, World};

use crate::evolution::TransmissionRecord;

pub const REPLAY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogRecord {
    Header { format_version: u32, mode: RecordMode, seed: u64, hash_interval: u64, config: String },
    Hash { step: u64, hash: String },
    Frame { step: u64, snapshot: String },
    Event { record: TransmissionRecord },
    End { step: u64, hash: String },
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("log line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("log truncated at line {line} (last verified step {last_step:?})")]
    Truncated { line: usize, last_step: Option<u64> },
    #[error("replay diverged at step {step}: recorded {recorded:016x}, replayed {replayed:016x}")]
    Corrupt { step: u64, recorded: u64, replayed: u64 },
    #[error("unsupported replay format_version {0}")]
    Version(u32),
    #[error("log header: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot rebuild world: {0}")]
    Engine(#[from] crate::engine::EngineError),
}

pub fn hex(h: u64) -> String {
    format!("{h:016x}")
}

/// Observer that appends hash, frame and event records to a writer.
pub struct ReplayRecorder<W: Write> {
    out: W,
    mode: RecordMode,
    hash_interval: u64,
    events: bool,
}

impl<W: Write> ReplayRecorder<W> {
    /// Write the header and the records for the initial state.
    pub fn start(mut out: W, config: &RunConfig, mode: RecordMode, world: &World) -> std::io::Result<Self> {
        let header = LogRecord::Header {
            format_version: REPLAY_FORMAT_VERSION,
            mode,
            seed: config.world.seed,
            hash_interval: config.observers.hash_interval.max(1),
            config: config_to_string(config),
        };
        write_record(&mut out, &header)?;
        let mut rec = ReplayRecorder { out, mode, hash_interval: config.observers.hash_interval.max(1), events: true };
        rec.checkpoint(world)?;
        Ok(rec)
    }

    pub fn without_events(mut self) -> Self {
        self.events = false;
        self
    }

    fn checkpoint(&mut self, world: &World) -> std::io::Result<()> {
        let step = world.step_count();
        let bytes = save_snapshot(world);
        write_record(&mut self.out, &LogRecord::Hash { step, hash: hex(fnv1a(&bytes)) })?;
        if self.mode == RecordMode::Full {
            write_record(&mut self.out, &LogRecord::Frame { step, snapshot: B64.encode(&bytes) })?;
        }
        Ok(())
    }

    /// Write the trailer and hand back the writer.
    pub fn finish(mut self, world: &World) -> std::io::Result<W> {
        let step = world.step_count();
        if step % self.hash_interval != 0 {
            self.checkpoint(world)?;
        }
        write_record(&mut self.out, &LogRecord::End { step, hash: hex(state_hash(world)) })?;
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> Observer for ReplayRecorder<W> {
    fn observe(&mut self, world: &World, report: &StepReport) -> Result<(), ObserverFailure> {
        if self.events {
            for t in &report.transmissions {
                write_record(&mut self.out, &LogRecord::Event { record: t.clone() })?;
            }
        }
        if world.step_count() % self.hash_interval == 0 {
            self.checkpoint(world)?;
        }
        Ok(())
    }
}

fn write_record<W: Write>(out: &mut W, rec: &LogRecord) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, rec)?;
    out.write_all(b"\n")
}

/// Parsed log, checked for structure but not yet for hashes.
#[derive(Debug, Clone)]
pub struct ReplayLog {
    pub mode: RecordMode,
    pub hash_interval: u64,
    pub config: RunConfig,
    pub hashes: Vec<(u64, u64)>,
    pub frames: Vec<(u64, Vec<u8>)>,
    pub events: Vec<TransmissionRecord>,
    pub end: (u64, u64),
}

fn parse_hash(s: &str, line: usize) -> Result<u64, ReplayError> {
    u64::from_str_radix(s, 16).map_err(|e| ReplayError::Format { line, message: format!("hash {s:?}: {e}") })
}

pub fn read_log<R: BufRead>(input: R) -> Result<ReplayLog, ReplayError> {
    let mut header = None;
    let mut hashes = Vec::new();
    let mut frames = Vec::new();
    let mut events = Vec::new();
    let mut end = None;
    let lines: Vec<String> = input.lines().collect::<Result<_, _>>()?;
    let n_lines = lines.len();
    for (k, text) in lines.iter().enumerate() {
        let line = k + 1;
        if text.trim().is_empty() {
            continue;
        }
        let last_step = hashes.last().map(|h: &(u64, u64)| h.0);
        let rec: LogRecord = match serde_json::from_str(text) {
            Ok(r) => r,
            Err(_) if line == n_lines => return Err(ReplayError::Truncated { line, last_step }),
            Err(e) => return Err(ReplayError::Format { line, message: e.to_string() }),
        };
        if end.is_some() {
            return Err(ReplayError::Format { line, message: "record after end trailer".into() });
        }
        match rec {
            LogRecord::Header { format_version, mode, hash_interval, config, .. } => {
                if line != 1 || header.is_some() {
                    return Err(ReplayError::Format { line, message: "misplaced header".into() });
                }
                if format_version != REPLAY_FORMAT_VERSION {
                    return Err(ReplayError::Version(format_version));
                }
                header = Some((mode, hash_interval, parse_config(&config, None)?));
            }
            _ if header.is_none() => return Err(ReplayError::Format { line, message: "missing header".into() }),
            LogRecord::Hash { step, hash } => hashes.push((step, parse_hash(&hash, line)?)),
            LogRecord::Frame { step, snapshot } => {
                let bytes =
                    B64.decode(snapshot).map_err(|e| ReplayError::Format { line, message: e.to_string() })?;
                frames.push((step, bytes));
            }
            LogRecord::Event { record } => events.push(record),
            LogRecord::End { step, hash } => end = Some((step, parse_hash(&hash, line)?)),
        }
    }
    let Some((mode, hash_interval, config)) = header else {
        return Err(ReplayError::Truncated { line: 0, last_step: None });
    };
    let Some(end) = end else {
        return Err(ReplayError::Truncated { line: n_lines, last_step: hashes.last().map(|h| h.0) });
    };
    Ok(ReplayLog { mode, hash_interval, config, hashes, frames, events, end })
}

/// Verified hash sequence plus the final world.
#[derive(Debug)]
pub struct ReplayOutcome {
    pub hashes: Vec<(u64, u64)>,
    pub world: World,
}

impl ReplayLog {
    /// Verify every recorded hash.
    ///
    /// Full logs are checked frame by frame without stepping; header-only
    /// logs are re-simulated from the embedded config.
    pub fn replay(&self) -> Result<ReplayOutcome, ReplayError> {
        match self.mode {
            RecordMode::Full if !self.frames.is_empty() => self.replay_frames(),
            _ => self.resimulate(),
        }
    }

    fn replay_frames(&self) -> Result<ReplayOutcome, ReplayError> {
        let mut verified = Vec::with_capacity(self.hashes.len());
        let mut last = None;
        for (&(step, recorded), (fstep, bytes)) in self.hashes.iter().zip(&self.frames) {
            let replayed = fnv1a(bytes);
            if *fstep != step || replayed != recorded {
                return Err(ReplayError::Corrupt { step, recorded, replayed });
            }
            let world = load_snapshot(bytes).map_err(|_| ReplayError::Corrupt { step, recorded, replayed })?;
            if world.step_count() != step {
                return Err(ReplayError::Corrupt { step, recorded, replayed });
            }
            verified.push((step, replayed));
            last = Some(world);
        }
        if self.frames.len() != self.hashes.len() {
            let step = self.hashes.get(self.frames.len()).map(|h| h.0).unwrap_or(self.end.0);
            return Err(ReplayError::Format { line: 0, message: format!("missing frame for step {step}") });
        }
        let world = last.ok_or(ReplayError::Format { line: 0, message: "no frames".into() })?;
        self.check_end(&world)?;
        Ok(ReplayOutcome { hashes: verified, world })
    }

    fn resimulate(&self) -> Result<ReplayOutcome, ReplayError> {
        let mut world = self.config.build_world()?;
        let mut verified = Vec::with_capacity(self.hashes.len());
        for &(step, recorded) in &self.hashes {
            while world.step_count() < step {
                world.step();
            }
            let replayed = state_hash(&world);
            if replayed != recorded {
                return Err(ReplayError::Corrupt { step, recorded, replayed });
            }
            verified.push((step, replayed));
        }
        while world.step_count() < self.end.0 {
            world.step();
        }
        self.check_end(&world)?;
        Ok(ReplayOutcome { hashes: verified, world })
    }

    fn check_end(&self, world: &World) -> Result<(), ReplayError> {
        let (step, recorded) = self.end;
        let replayed = state_hash(world);
        if world.step_count() != step || replayed != recorded {
            return Err(ReplayError::Corrupt { step, recorded, replayed });
        }
        Ok(())
    }
}

/// Build the world from `config`, run it while recording, and return the final world.
pub fn record_run<W: Write>(config: &RunConfig, mode: RecordMode, out: W) -> Result<(World, W), RecordError> {
    let mut world = config.build_world()?;
    let mut rec = ReplayRecorder::start(out, config, mode, &world)?;
    crate::engine::run(&mut world, config.n_steps, &mut [&mut rec])?;
    let out = rec.finish(&world)?;
    Ok((world, out))
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
    #[error(transparent)]
    Run(#[from] crate::engine::RunError),
}
