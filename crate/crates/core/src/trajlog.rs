//! Line-delimited trajectory log format.
//!
//! A log is UTF-8 text: one JSON header object on the first line, then for
//! each trajectory a metadata line followed by one line per record.
//!
//! ```text
//! {"format_version":1,"kind":"decoyrl-trajectory-log","scenario_hash":"…","trajectory_count":2}
//! {"trajectory":{"seed":17,"stationary":true,"terminated":true,"record_count":2,"defender_events":[]}}
//! {"step":0,"state_index":0,"action":{"kind":"passive_recon"},…}
//! {"step":1,…}
//! {"trajectory":{…}}
//! …
//! ```
//!
//! Reading validates the header, record chaining (exempting steps where a
//! defender event re-encoded the state), and per-line JSON; errors carry
//! 1-based line numbers.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{DefenderEvent, Trajectory, TrajectoryRecord, TrajectorySet};

pub const LOG_FORMAT_VERSION: u32 = 1;
pub const LOG_KIND: &str = "decoyrl-trajectory-log";

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: corrupt log entry: {source}")]
    Corrupt {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("log is empty (missing header line)")]
    MissingHeader,

    #[error("line {line}: expected {expected}")]
    Unexpected { line: usize, expected: &'static str },

    #[error("unsupported log kind {0:?}")]
    BadKind(String),

    #[error("unsupported log format_version {0}")]
    BadVersion(u32),

    #[error(
        "broken state chaining at step {step} of trajectory {trajectory}: \
         record {prev} ends in state {expected} but step {step} starts in {found}"
    )]
    BrokenChain {
        trajectory: usize,
        step: usize,
        prev: usize,
        expected: u64,
        found: u64,
    },

    #[error("trajectory {index} carries scenario hash {found}, log header says {expected}")]
    MixedHashes {
        index: usize,
        expected: String,
        found: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    kind: String,
    scenario_hash: String,
    trajectory_count: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryMetaLine {
    trajectory: TrajectoryMeta,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryMeta {
    seed: u64,
    stationary: bool,
    terminated: bool,
    record_count: usize,
    #[serde(default)]
    defender_events: Vec<DefenderEvent>,
}

/// Writes a trajectory set as a line-delimited log.
pub fn write_log<W: Write>(set: &TrajectorySet, mut sink: W) -> Result<(), LogError> {
    let header = Header {
        format_version: LOG_FORMAT_VERSION,
        kind: LOG_KIND.to_string(),
        scenario_hash: set.scenario_hash.clone(),
        trajectory_count: set.trajectories.len(),
    };
    writeln!(sink, "{}", serde_json::to_string(&header).expect("header"))?;
    for t in &set.trajectories {
        let meta = TrajectoryMetaLine {
            trajectory: TrajectoryMeta {
                seed: t.seed,
                stationary: t.stationary,
                terminated: t.terminated,
                record_count: t.records.len(),
                defender_events: t.defender_events.clone(),
            },
        };
        writeln!(sink, "{}", serde_json::to_string(&meta).expect("meta"))?;
        for r in &t.records {
            writeln!(sink, "{}", serde_json::to_string(r).expect("record"))?;
        }
    }
    Ok(())
}

/// Reads and validates a line-delimited trajectory log.
pub fn read_log<R: BufRead>(source: R) -> Result<TrajectorySet, LogError> {
    let mut lines = source.lines().enumerate();
    let (_, header_line) = lines.next().ok_or(LogError::MissingHeader)?;
    let header: Header = serde_json::from_str(&header_line?)
        .map_err(|source| LogError::Corrupt { line: 1, source })?;
    if header.kind != LOG_KIND {
        return Err(LogError::BadKind(header.kind));
    }
    if header.format_version != LOG_FORMAT_VERSION {
        return Err(LogError::BadVersion(header.format_version));
    }

    let mut trajectories = Vec::with_capacity(header.trajectory_count);
    for index in 0..header.trajectory_count {
        let (line_idx, line) = lines
            .next()
            .ok_or(LogError::Unexpected {
                line: 0,
                expected: "trajectory metadata line",
            })?;
        let line_no = line_idx + 1;
        let meta: TrajectoryMetaLine = serde_json::from_str(&line?)
            .map_err(|source| LogError::Corrupt { line: line_no, source })?;
        let meta = meta.trajectory;
        let mut records: Vec<TrajectoryRecord> = Vec::with_capacity(meta.record_count);
        for _ in 0..meta.record_count {
            let (line_idx, line) = lines.next().ok_or(LogError::Unexpected {
                line: 0,
                expected: "trajectory record line",
            })?;
            let line_no = line_idx + 1;
            let record: TrajectoryRecord = serde_json::from_str(&line?)
                .map_err(|source| LogError::Corrupt { line: line_no, source })?;
            records.push(record);
        }
        validate_chaining(index, &records, &meta.defender_events)?;
        trajectories.push(Trajectory {
            scenario_hash: header.scenario_hash.clone(),
            seed: meta.seed,
            stationary: meta.stationary,
            terminated: meta.terminated,
            records,
            defender_events: meta.defender_events,
        });
    }
    if let Some((line_idx, _)) = lines.next() {
        return Err(LogError::Unexpected {
            line: line_idx + 1,
            expected: "end of log",
        });
    }
    TrajectorySet::new(trajectories).map_err(|e| LogError::MixedHashes {
        index: 0,
        expected: e.first,
        found: e.second,
    })
}

fn validate_chaining(
    trajectory: usize,
    records: &[TrajectoryRecord],
    events: &[DefenderEvent],
) -> Result<(), LogError> {
    for (i, pair) in records.windows(2).enumerate() {
        let step = pair[1].step;
        // A defender event at this step re-encoded the state.
        if events.iter().any(|e| e.step == step) {
            continue;
        }
        if pair[0].next_state_index != pair[1].state_index {
            return Err(LogError::BrokenChain {
                trajectory,
                step,
                prev: i,
                expected: pair[0].next_state_index,
                found: pair[1].state_index,
            });
        }
    }
    Ok(())
}

/// Convenience file wrappers.
pub fn write_log_file(set: &TrajectorySet, path: &std::path::Path) -> Result<(), LogError> {
    let file = std::fs::File::create(path)?;
    write_log(set, std::io::BufWriter::new(file))
}

pub fn read_log_file(path: &std::path::Path) -> Result<TrajectorySet, LogError> {
    let file = std::fs::File::open(path)?;
    read_log(std::io::BufReader::new(file))
}
