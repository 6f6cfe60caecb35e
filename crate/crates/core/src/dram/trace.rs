//! Timestamped DRAM/PE event traces and their CSV form.
//!
//! CSV columns: `timestamp_ns,unit,event,bank,subarray,row`, where `unit` names
//! the rank-level unit as `c<channel>r<rank>`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::RowAddress;

pub const TRACE_HEADER: &str = "timestamp_ns,unit,event,bank,subarray,row";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Act,
    /// PE starts scanning the open row.
    Pe,
    Read,
    Pre,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Act => "ACT",
            EventKind::Pe => "PE",
            EventKind::Read => "READ",
            EventKind::Pre => "PRE",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ACT" => Ok(EventKind::Act),
            "PE" => Ok(EventKind::Pe),
            "READ" => Ok(EventKind::Read),
            "PRE" => Ok(EventKind::Pre),
            other => Err(format!("unknown event `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub timestamp_ns: f64,
    pub kind: EventKind,
    pub addr: RowAddress,
}

impl TraceEvent {
    pub fn new(timestamp_ns: f64, kind: EventKind, addr: RowAddress) -> Self {
        Self {
            timestamp_ns,
            kind,
            addr,
        }
    }
}

pub fn write_trace_csv<W: Write>(mut out: W, events: &[TraceEvent]) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for e in events {
        writeln!(
            out,
            "{},c{}r{},{},{},{},{}",
            e.timestamp_ns, e.addr.channel, e.addr.rank, e.kind, e.addr.bank, e.addr.subarray, e.addr.row
        )?;
    }
    Ok(())
}

fn parse_unit(unit: &str) -> Option<(u32, u32)> {
    let rest = unit.strip_prefix('c')?;
    let (ch, rk) = rest.split_once('r')?;
    Some((ch.parse().ok()?, rk.parse().ok()?))
}

/// Parses the CSV written by [`write_trace_csv`]. The header line is required.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceEvent>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => return Err(Error::parse(1, "missing trace header")),
    }
    let mut events = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [ts, unit, event, bank, subarray, row] = fields[..] else {
            return Err(Error::parse(line_no, "expected 6 fields"));
        };
        let timestamp_ns: f64 = ts
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad timestamp `{ts}`")))?;
        if !timestamp_ns.is_finite() || timestamp_ns < 0.0 {
            return Err(Error::parse(line_no, "timestamp must be finite and non-negative"));
        }
        let (channel, rank) =
            parse_unit(unit).ok_or_else(|| Error::parse(line_no, format!("bad unit `{unit}`")))?;
        let kind = event.parse().map_err(|e: String| Error::parse(line_no, e))?;
        let index = |s: &str| -> Result<u32> {
            s.parse()
                .map_err(|_| Error::parse(line_no, format!("bad index `{s}`")))
        };
        events.push(TraceEvent {
            timestamp_ns,
            kind,
            addr: RowAddress {
                channel,
                rank,
                bank: index(bank)?,
                subarray: index(subarray)?,
                row: index(row)?,
            },
        });
    }
    Ok(events)
}
