//! Flat `name = value` configuration files.
//!
//! One assignment per line; `#` starts a comment that runs to end of line.
//! Every geometry and timing key is required. `cpu_scan_ns_per_line` is
//! optional and feeds the conventional-DRAM cost model.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{DramGeometry, DramTiming};

/// Per-line CPU scan cost used when none is configured.
pub const DEFAULT_CPU_SCAN_NS_PER_LINE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub geometry: DramGeometry,
    pub timing: DramTiming,
    pub cpu_scan_ns_per_line: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            geometry: DramGeometry::default(),
            timing: DramTiming::default(),
            cpu_scan_ns_per_line: DEFAULT_CPU_SCAN_NS_PER_LINE,
        }
    }
}

const INTEGER_KEYS: [&str; 11] = [
    "channels",
    "ranks_per_channel",
    "banks_per_rank",
    "subarrays_per_bank",
    "rows_per_subarray",
    "row_size_bytes",
    "tRCD_cycles",
    "tRP_cycles",
    "tCL_cycles",
    "tRAS_cycles",
    "burst_cycles_per_line",
];
const DECIMAL_KEYS: [&str; 2] = ["tCK_ns", "pe_tick_ns"];
const OPTIONAL_KEYS: [&str; 1] = ["cpu_scan_ns_per_line"];

#[derive(Debug, Clone, Copy)]
enum Number {
    Int(u64),
    Dec(f64),
}

fn parse_number(text: &str) -> Option<Number> {
    if !text.is_empty() && text.bytes().all(|b| b.is_ascii_digit()) {
        return text.parse().ok().map(Number::Int);
    }
    // integer-or-decimal only: no signs, exponents, inf or nan
    let (int, frac) = text.split_once('.')?;
    let digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if int.is_empty() && frac.is_empty() || !digits(int) || !digits(frac) {
        return None;
    }
    text.parse().ok().map(Number::Dec)
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: BTreeMap<&str, (usize, Number)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, "expected `name = value`"))?;
            let name = name.trim();
            let value = value.trim();
            let known = INTEGER_KEYS
                .iter()
                .chain(&DECIMAL_KEYS)
                .chain(&OPTIONAL_KEYS)
                .find(|k| **k == name)
                .ok_or_else(|| Error::parse(line_no, format!("unknown key `{name}`")))?;
            let number = parse_number(value)
                .ok_or_else(|| Error::parse(line_no, format!("`{value}` is not a number")))?;
            if INTEGER_KEYS.contains(known) && !matches!(number, Number::Int(_)) {
                return Err(Error::parse(line_no, format!("`{name}` must be an integer")));
            }
            if values.insert(known, (line_no, number)).is_some() {
                return Err(Error::parse(line_no, format!("duplicate key `{name}`")));
            }
        }

        let int = |key: &str| -> Result<u32> {
            match values.get(key) {
                Some(&(line, Number::Int(v))) => u32::try_from(v)
                    .map_err(|_| Error::parse(line, format!("`{key}` does not fit in 32 bits"))),
                Some(_) => unreachable!("integer keys are checked while parsing"),
                None => Err(Error::Config(format!("missing key `{key}`"))),
            }
        };
        let dec = |key: &str| -> Option<f64> {
            values.get(key).map(|&(_, n)| match n {
                Number::Int(v) => v as f64,
                Number::Dec(v) => v,
            })
        };
        let required_dec =
            |key: &str| dec(key).ok_or_else(|| Error::Config(format!("missing key `{key}`")));

        let config = SimConfig {
            geometry: DramGeometry {
                channels: int("channels")?,
                ranks_per_channel: int("ranks_per_channel")?,
                banks_per_rank: int("banks_per_rank")?,
                subarrays_per_bank: int("subarrays_per_bank")?,
                rows_per_subarray: int("rows_per_subarray")?,
                row_size_bytes: int("row_size_bytes")?,
            },
            timing: DramTiming {
                tck_ns: required_dec("tCK_ns")?,
                trcd_cycles: int("tRCD_cycles")?,
                trp_cycles: int("tRP_cycles")?,
                tcl_cycles: int("tCL_cycles")?,
                tras_cycles: int("tRAS_cycles")?,
                burst_cycles_per_line: int("burst_cycles_per_line")?,
                pe_tick_ns: required_dec("pe_tick_ns")?,
            },
            cpu_scan_ns_per_line: dec("cpu_scan_ns_per_line")
                .unwrap_or(DEFAULT_CPU_SCAN_NS_PER_LINE),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.timing.validate()?;
        if !(self.cpu_scan_ns_per_line.is_finite() && self.cpu_scan_ns_per_line >= 0.0) {
            return Err(Error::Config(
                "cpu_scan_ns_per_line must be non-negative".into(),
            ));
        }
        if self.geometry.total_pages() > u32::MAX as u64 {
            return Err(Error::Config("more than 2^32 pages".into()));
        }
        Ok(())
    }

    /// Renders the config in the same format [`SimConfig::parse`] reads.
    pub fn to_config_string(&self) -> String {
        let g = &self.geometry;
        let t = &self.timing;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("channels", g.channels.to_string());
        put("ranks_per_channel", g.ranks_per_channel.to_string());
        put("banks_per_rank", g.banks_per_rank.to_string());
        put("subarrays_per_bank", g.subarrays_per_bank.to_string());
        put("rows_per_subarray", g.rows_per_subarray.to_string());
        put("row_size_bytes", g.row_size_bytes.to_string());
        put("tCK_ns", fmt_decimal(t.tck_ns));
        put("tRCD_cycles", t.trcd_cycles.to_string());
        put("tRP_cycles", t.trp_cycles.to_string());
        put("tCL_cycles", t.tcl_cycles.to_string());
        put("tRAS_cycles", t.tras_cycles.to_string());
        put("burst_cycles_per_line", t.burst_cycles_per_line.to_string());
        put("pe_tick_ns", fmt_decimal(t.pe_tick_ns));
        put("cpu_scan_ns_per_line", fmt_decimal(self.cpu_scan_ns_per_line));
        out
    }
}

fn fmt_decimal(v: f64) -> String {
    let s = format!("{v}");
    if s.contains('.') {
        s
    } else {
        format!("{s}.0")
    }
}
