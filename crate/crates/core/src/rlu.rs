//! The rank-level unit: executes probe commands against subarray PEs under
//! DRAM timing, returns zero-padded cache lines and schedules batches.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dram::{
    activate_kind, map_page_to_row, Activation, DramGeometry, DramTiming, EventKind, PagePolicy,
    RowAddress, SubarrayState, TraceEvent,
};
use crate::error::{Error, Result};
use crate::map::PageStore;
use crate::pe::{area_scan, perf_scan, BitSlicedRegion, MatchResult, PeConfig, PeVariant};
use crate::{SlotRange, CACHE_LINE_BYTES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeCommand {
    pub key: u32,
    pub page_id: u64,
    pub range: SlotRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeStatus {
    Found,
    NotFound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeResult {
    pub status: ProbeStatus,
    pub value: u32,
    pub cache_line: [u8; CACHE_LINE_BYTES],
    pub latency_ns: f64,
    pub pe_ticks: u64,
    /// Absolute start and end on the unit's timeline.
    pub start_ns: f64,
    pub end_ns: f64,
    pub trace: Vec<TraceEvent>,
}

impl ProbeResult {
    pub fn value(&self) -> Option<u32> {
        (self.status == ProbeStatus::Found).then_some(self.value)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RluStats {
    pub commands: u64,
    pub activations: u64,
    pub row_hits: u64,
    pub row_conflicts: u64,
    pub pe_ticks_total: u64,
    pub bytes_on_bus: u64,
}

impl RluStats {
    pub fn merge(&mut self, other: &RluStats) {
        self.commands += other.commands;
        self.activations += other.activations;
        self.row_hits += other.row_hits;
        self.row_conflicts += other.row_conflicts;
        self.pe_ticks_total += other.pe_ticks_total;
        self.bytes_on_bus += other.bytes_on_bus;
    }
}

/// Found values occupy the first four bytes, little-endian; everything else is zero.
pub fn pad_to_cache_line(value: Option<u32>) -> [u8; CACHE_LINE_BYTES] {
    let mut line = [0u8; CACHE_LINE_BYTES];
    if let Some(v) = value {
        line[..4].copy_from_slice(&v.to_le_bytes());
    }
    line
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BatchPolicy {
    /// One command at a time.
    #[default]
    Serial,
    /// Commands to distinct (channel, rank, bank) overlap; same-bank commands
    /// run in order.
    BankParallel,
}

/// Start-time bookkeeping shared by the simulated engines.
#[derive(Debug, Clone, Default)]
pub(crate) struct Timeline {
    policy: BatchPolicy,
    clock: f64,
    bank_ready: HashMap<(u32, u32, u32), f64>,
    horizon: f64,
}

impl Timeline {
    pub(crate) fn new(policy: BatchPolicy) -> Self {
        Self {
            policy,
            ..Default::default()
        }
    }

    pub(crate) fn start(&self, addr: &RowAddress, not_before: f64) -> f64 {
        let ready = match self.policy {
            BatchPolicy::Serial => self.clock,
            BatchPolicy::BankParallel => {
                self.bank_ready.get(&addr.bank_id()).copied().unwrap_or(0.0)
            }
        };
        ready.max(not_before)
    }

    pub(crate) fn finish(&mut self, addr: &RowAddress, end: f64) {
        self.clock = self.clock.max(end);
        self.bank_ready.insert(addr.bank_id(), end);
        self.horizon = self.horizon.max(end);
    }

    /// Latest completion time seen so far.
    pub(crate) fn horizon(&self) -> f64 {
        self.horizon
    }

    pub(crate) fn policy(&self) -> BatchPolicy {
        self.policy
    }
}

/// Rank-level unit simulator. Holds row-buffer state for every subarray it has
/// touched and a cache of bit-sliced pages for the performance-optimized PE.
#[derive(Debug, Clone)]
pub struct Rlu {
    geometry: DramGeometry,
    timing: DramTiming,
    pe: PeConfig,
    page_policy: PagePolicy,
    timeline: Timeline,
    subarrays: HashMap<usize, SubarrayState>,
    stats: RluStats,
    regions: HashMap<u64, (u64, BitSlicedRegion)>,
}

impl Rlu {
    pub fn new(
        geometry: DramGeometry,
        timing: DramTiming,
        pe: PeConfig,
        page_policy: PagePolicy,
        batch_policy: BatchPolicy,
    ) -> Result<Self> {
        geometry.validate()?;
        timing.validate()?;
        pe.validate()?;
        Ok(Self {
            geometry,
            timing,
            pe,
            page_policy,
            timeline: Timeline::new(batch_policy),
            subarrays: HashMap::new(),
            stats: RluStats::default(),
            regions: HashMap::new(),
        })
    }

    pub fn stats(&self) -> RluStats {
        self.stats
    }

    pub fn pe_config(&self) -> &PeConfig {
        &self.pe
    }

    pub fn timing(&self) -> &DramTiming {
        &self.timing
    }

    pub fn batch_policy(&self) -> BatchPolicy {
        self.timeline.policy()
    }

    /// Completion time of the last command on the unit's timeline.
    pub fn now(&self) -> f64 {
        self.timeline.horizon()
    }

    fn scan(&mut self, store: &PageStore, cmd: &ProbeCommand) -> Result<MatchResult> {
        let row = store.row(cmd.page_id).ok_or_else(|| Error::Range {
            what: "unallocated page",
            index: cmd.page_id,
            limit: self.geometry.total_pages(),
        })?;
        match self.pe.variant {
            PeVariant::AreaOptimized => area_scan(row, cmd.key, cmd.range.as_range()),
            PeVariant::PerfOptimized => {
                let version = store.version(cmd.page_id);
                let stale = !matches!(self.regions.get(&cmd.page_id), Some((v, _)) if *v == version);
                if stale {
                    let region =
                        BitSlicedRegion::from_row(row, self.pe.key_bits, self.pe.value_bits)?;
                    self.regions.insert(cmd.page_id, (version, region));
                }
                let (_, region) = &self.regions[&cmd.page_id];
                perf_scan(region, cmd.key, cmd.range.as_range(), &self.pe)
            }
        }
    }

    /// Runs one probe no earlier than `not_before` on the unit's timeline.
    ///
    /// Latency is activation + PE ticks + one cache-line readout, plus the
    /// closing precharge under the closed-page policy. A precharge is held back
    /// until tRAS has elapsed since its activation.
    pub fn execute_probe_at(
        &mut self,
        store: &PageStore,
        cmd: &ProbeCommand,
        not_before: f64,
    ) -> Result<ProbeResult> {
        let addr = map_page_to_row(cmd.page_id, &self.geometry)?;
        let capacity = self.geometry.page_capacity();
        if cmd.range.start > cmd.range.end || cmd.range.end > capacity {
            return Err(Error::range("slot range end", cmd.range.end as u64, capacity as u64));
        }
        let matched = self.scan(store, cmd)?;

        let t = &self.timing;
        let start = self.timeline.start(&addr, not_before);
        let state = self
            .subarrays
            .entry(self.geometry.subarray_index(&addr))
            .or_default();
        let mut trace = Vec::with_capacity(5);
        let mut now = start;
        let prior = *state;
        match activate_kind(&addr, state, t).0 {
            Activation::Hit => self.stats.row_hits += 1,
            Activation::Idle => {
                trace.push(TraceEvent::new(now, EventKind::Act, addr));
                state.activated_at = now;
                now += t.trcd_ns();
                self.stats.activations += 1;
            }
            Activation::Conflict => {
                let open = RowAddress {
                    row: prior.open_row.expect("conflict implies an open row"),
                    ..addr
                };
                let pre = now.max(prior.activated_at + t.tras_ns());
                trace.push(TraceEvent::new(pre, EventKind::Pre, open));
                let act = pre + t.trp_ns();
                trace.push(TraceEvent::new(act, EventKind::Act, addr));
                state.activated_at = act;
                now = act + t.trcd_ns();
                self.stats.activations += 1;
                self.stats.row_conflicts += 1;
            }
        }

        trace.push(TraceEvent::new(now, EventKind::Pe, addr));
        now += matched.pe_ticks as f64 * t.pe_tick_ns;
        trace.push(TraceEvent::new(now, EventKind::Read, addr));
        now += t.column_access(CACHE_LINE_BYTES as u64);

        if self.page_policy == PagePolicy::Closed {
            let pre = now.max(state.activated_at + t.tras_ns());
            trace.push(TraceEvent::new(pre, EventKind::Pre, addr));
            state.open_row = None;
            now = pre + t.trp_ns();
        }

        self.timeline.finish(&addr, now);
        self.stats.commands += 1;
        self.stats.pe_ticks_total += matched.pe_ticks;
        self.stats.bytes_on_bus += CACHE_LINE_BYTES as u64;

        let value = matched.value();
        Ok(ProbeResult {
            status: if matched.found {
                ProbeStatus::Found
            } else {
                ProbeStatus::NotFound
            },
            value: value.unwrap_or(0),
            cache_line: pad_to_cache_line(value),
            latency_ns: now - start,
            pe_ticks: matched.pe_ticks,
            start_ns: start,
            end_ns: now,
            trace,
        })
    }

    pub fn execute_probe(&mut self, store: &PageStore, cmd: &ProbeCommand) -> Result<ProbeResult> {
        let not_before = self.now();
        self.execute_probe_at(store, cmd, not_before)
    }

    /// Runs independent commands under the unit's batch policy. The makespan is
    /// measured from the moment the batch is issued.
    pub fn execute_batch(
        &mut self,
        store: &PageStore,
        cmds: &[ProbeCommand],
    ) -> Result<(Vec<ProbeResult>, f64)> {
        let issued = self.now();
        let results = cmds
            .iter()
            .map(|c| self.execute_probe_at(store, c, issued))
            .collect::<Result<Vec<_>>>()?;
        let end = results.iter().map(|r| r.end_ns).fold(issued, f64::max);
        Ok((results, end - issued))
    }
}
