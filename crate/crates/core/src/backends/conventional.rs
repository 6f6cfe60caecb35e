//! Host-side bucket traversal over a conventional DRAM channel: the whole
//! filled part of each page is streamed to the CPU and scanned there.

use std::collections::HashMap;

use crate::dram::{map_page_to_row, DramGeometry, DramTiming, EventKind, SubarrayState, TraceEvent};
use crate::error::{Error, Result};
use crate::map::{PageStore, ProbeEngine};
use crate::pe::{area_scan, EMPTY_KEY};
use crate::rlu::{pad_to_cache_line, BatchPolicy, ProbeCommand, ProbeResult, ProbeStatus, RluStats, Timeline};
use crate::CACHE_LINE_BYTES;

/// Bytes moved over the bus for a bucket of `bucket_bytes`: whole lines.
pub fn bytes_on_bus(bucket_bytes: u64) -> u64 {
    bucket_bytes.div_ceil(CACHE_LINE_BYTES as u64) * CACHE_LINE_BYTES as u64
}

/// Precharge + activate, stream `bucket_bytes`, then scan every line on the CPU.
pub fn conventional_probe_cost(bucket_bytes: u64, timing: &DramTiming, cpu_scan_ns_per_line: f64) -> f64 {
    let lines = bucket_bytes.div_ceil(CACHE_LINE_BYTES as u64);
    timing.trp_ns() + timing.trcd_ns() + timing.column_access(bucket_bytes) + cpu_scan_ns_per_line * lines as f64
}

/// Simulated CPU traversal engine. Every access assumes a row conflict; the
/// row is left open afterwards, and the next access to the subarray waits for
/// tRAS before precharging it.
#[derive(Debug, Clone)]
pub struct ConventionalEngine {
    geometry: DramGeometry,
    timing: DramTiming,
    cpu_scan_ns_per_line: f64,
    timeline: Timeline,
    subarrays: HashMap<usize, SubarrayState>,
    stats: RluStats,
}

impl ConventionalEngine {
    pub fn new(
        geometry: DramGeometry,
        timing: DramTiming,
        cpu_scan_ns_per_line: f64,
        policy: BatchPolicy,
    ) -> Result<Self> {
        geometry.validate()?;
        timing.validate()?;
        if !(cpu_scan_ns_per_line.is_finite() && cpu_scan_ns_per_line >= 0.0) {
            return Err(Error::Config("cpu_scan_ns_per_line must be a non-negative number".into()));
        }
        Ok(Self {
            geometry,
            timing,
            cpu_scan_ns_per_line,
            timeline: Timeline::new(policy),
            subarrays: HashMap::new(),
            stats: RluStats::default(),
        })
    }
}

impl ProbeEngine for ConventionalEngine {
    fn probe_page(&mut self, store: &PageStore, cmd: &ProbeCommand, not_before: f64) -> Result<ProbeResult> {
        let addr = map_page_to_row(cmd.page_id, &self.geometry)?;
        let capacity = self.geometry.page_capacity();
        if cmd.range.start > cmd.range.end || cmd.range.end > capacity {
            return Err(Error::range("slot range end", cmd.range.end as u64, capacity as u64));
        }
        let row = store
            .row(cmd.page_id)
            .ok_or_else(|| Error::range("unallocated page", cmd.page_id, self.geometry.total_pages()))?;
        let range = cmd.range.as_range();
        let filled = row.find_raw(range.clone(), EMPTY_KEY).unwrap_or(range.end) - range.start;
        let bucket_bytes = (filled * crate::KV_PAIR_BYTES) as u64;
        let matched = area_scan(row, cmd.key, range)?;

        let t = &self.timing;
        let start = self.timeline.start(&addr, not_before);
        let state = self.subarrays.entry(self.geometry.subarray_index(&addr)).or_default();
        let pre = match state.open_row {
            Some(_) => start.max(state.activated_at + t.tras_ns()),
            None => start,
        };
        let pre_addr = state.open_row.map_or(addr, |row| crate::dram::RowAddress { row, ..addr });
        let act = pre + t.trp_ns();
        let read = act + t.trcd_ns();
        let end = read + t.column_access(bucket_bytes)
            + self.cpu_scan_ns_per_line * bucket_bytes.div_ceil(CACHE_LINE_BYTES as u64) as f64;
        state.open_row = Some(addr.row);
        state.activated_at = act;

        let mut trace = vec![
            TraceEvent::new(pre, EventKind::Pre, pre_addr),
            TraceEvent::new(act, EventKind::Act, addr),
        ];
        if bucket_bytes > 0 {
            trace.push(TraceEvent::new(read, EventKind::Read, addr));
        }

        self.timeline.finish(&addr, end);
        self.stats.commands += 1;
        self.stats.activations += 1;
        self.stats.row_conflicts += 1;
        self.stats.bytes_on_bus += bytes_on_bus(bucket_bytes);

        let value = matched.value();
        Ok(ProbeResult {
            status: if matched.found { ProbeStatus::Found } else { ProbeStatus::NotFound },
            value: value.unwrap_or(0),
            cache_line: pad_to_cache_line(value),
            latency_ns: end - start,
            pe_ticks: 0,
            start_ns: start,
            end_ns: end,
            trace,
        })
    }

    fn now(&self) -> f64 {
        self.timeline.horizon()
    }

    fn stats(&self) -> RluStats {
        self.stats
    }
}
