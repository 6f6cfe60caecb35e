//! The hashmap front end: buckets stored at page granularity, overflow pages
//! linked through a bookkeeping structure, tombstone deletion and bucket
//! co-location.

mod bookkeeping;
mod hash;
mod store;

use serde::{Deserialize, Serialize};

use crate::dram::{DramGeometry, TraceEvent};
use crate::error::{Error, Result};
use crate::pe::{RowImage, Slot, TOMBSTONE_KEY};
use crate::rlu::{ProbeCommand, ProbeResult, Rlu, RluStats};
use crate::SlotRange;

pub use bookkeeping::{parse_sidecar, Bookkeeping, ChainEntry, PageChain, SidecarChain};
pub use hash::{hash_key, HashConfig, FIBONACCI_MULTIPLIER};
pub use store::{PageAllocator, PageStore};

/// Anything that can execute a [`ProbeCommand`] against stored pages.
pub trait ProbeEngine {
    fn probe_page(
        &mut self,
        store: &PageStore,
        cmd: &ProbeCommand,
        not_before: f64,
    ) -> Result<ProbeResult>;

    /// Completion time of the latest command.
    fn now(&self) -> f64;

    fn stats(&self) -> RluStats;
}

impl ProbeEngine for Rlu {
    fn probe_page(
        &mut self,
        store: &PageStore,
        cmd: &ProbeCommand,
        not_before: f64,
    ) -> Result<ProbeResult> {
        self.execute_probe_at(store, cmd, not_before)
    }

    fn now(&self) -> f64 {
        Rlu::now(self)
    }

    fn stats(&self) -> RluStats {
        Rlu::stats(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InsertStatus {
    Inserted,
    /// The key was present; its value was overwritten in place.
    Updated,
}

/// Outcome of walking a bucket's chain for one key.
#[derive(Debug, Clone, Default)]
pub struct ChainProbe {
    pub value: Option<u32>,
    /// Sum of the latencies of the commands actually issued.
    pub latency_ns: f64,
    pub commands: usize,
    pub pe_ticks: u64,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketHistogram {
    pub lengths: Vec<usize>,
    pub mean: f64,
    pub max: usize,
    /// Population standard deviation over mean; 0 for an empty map.
    pub coefficient_of_variation: f64,
}

impl BucketHistogram {
    pub fn from_lengths(lengths: Vec<usize>) -> Self {
        let n = lengths.len().max(1) as f64;
        let mean = lengths.iter().sum::<usize>() as f64 / n;
        let max = lengths.iter().copied().max().unwrap_or(0);
        let var = lengths
            .iter()
            .map(|&l| (l as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        let coefficient_of_variation = if mean > 0.0 { var.sqrt() / mean } else { 0.0 };
        Self {
            lengths,
            mean,
            max,
            coefficient_of_variation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedPage {
    pub page_id: u64,
    pub buckets: Vec<(usize, SlotRange)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelocationReport {
    pub shared_pages: Vec<SharedPage>,
    pub pages_freed: usize,
}

impl RelocationReport {
    pub fn buckets_relocated(&self) -> usize {
        self.shared_pages.iter().map(|p| p.buckets.len()).sum()
    }
}

/// Hashmap whose buckets are chains of DRAM pages.
#[derive(Debug, Clone)]
pub struct HashMemMap {
    hash: HashConfig,
    geometry: DramGeometry,
    store: PageStore,
    book: Bookkeeping,
    live: usize,
}

impl HashMemMap {
    pub fn new(geometry: DramGeometry, hash: HashConfig) -> Result<Self> {
        Self::with_page_limit(geometry, hash, geometry.total_pages())
    }

    /// Like [`HashMemMap::new`] but allocates at most `page_limit` pages.
    pub fn with_page_limit(geometry: DramGeometry, hash: HashConfig, page_limit: u64) -> Result<Self> {
        geometry.validate()?;
        hash.validate()?;
        let bucket_count = usize::try_from(hash.bucket_count)
            .map_err(|_| Error::Config("bucket_count too large".into()))?;
        Ok(Self {
            hash,
            geometry,
            store: PageStore::new(),
            book: Bookkeeping::new(bucket_count, page_limit.min(geometry.total_pages())),
            live: 0,
        })
    }

    pub fn hash_config(&self) -> &HashConfig {
        &self.hash
    }

    pub fn geometry(&self) -> &DramGeometry {
        &self.geometry
    }

    pub fn page_capacity(&self) -> usize {
        self.geometry.page_capacity()
    }

    pub fn store(&self) -> &PageStore {
        &self.store
    }

    pub fn bookkeeping(&self) -> &Bookkeeping {
        &self.book
    }

    pub fn bucket_count(&self) -> usize {
        self.book.chains.len()
    }

    pub fn chain(&self, bucket: usize) -> &PageChain {
        self.book.chain(bucket)
    }

    pub fn bucket_of(&self, key: u32) -> Result<usize> {
        Ok(hash_key(key, &self.hash)? as usize)
    }

    pub fn len(&self) -> usize {
        self.live
    }

    pub fn is_empty(&self) -> bool {
        self.live == 0
    }

    pub fn pages_in_use(&self) -> u64 {
        self.book.pages_in_use()
    }

    /// Slots holding either a live pair or a tombstone.
    pub fn occupied_slots(&self) -> usize {
        self.book.chains.iter().map(PageChain::filled).sum()
    }

    fn row(&self, page_id: u64) -> &RowImage {
        self.store
            .row(page_id)
            .expect("chain entries always reference allocated pages")
    }

    /// Locates `key` as (chain index, slot).
    fn locate(&self, bucket: usize, key: u32) -> Option<(usize, usize)> {
        self.book.chains[bucket]
            .entries
            .iter()
            .enumerate()
            .find_map(|(i, e)| {
                self.row(e.page_id)
                    .find_raw(e.filled_slots(), key)
                    .map(|slot| (i, slot))
            })
    }

    pub fn insert(&mut self, key: u32, value: u32) -> Result<InsertStatus> {
        let bucket = self.bucket_of(key)?;
        let occupied = Slot::Occupied { key, value };

        if let Some((i, slot)) = self.locate(bucket, key) {
            let page = self.book.chains[bucket].entries[i].page_id;
            self.store.set_slot(page, slot, occupied)?;
            return Ok(InsertStatus::Updated);
        }

        let chain = &self.book.chains[bucket];
        let reuse = chain
            .entries
            .iter()
            .position(|e| e.tombstones > 0)
            .map(|i| {
                let e = &chain.entries[i];
                let slot = self
                    .row(e.page_id)
                    .find_raw(e.filled_slots(), TOMBSTONE_KEY)
                    .expect("tombstone count matches page contents");
                (i, slot)
            });
        if let Some((i, slot)) = reuse {
            let entry = &mut self.book.chains[bucket].entries[i];
            entry.tombstones -= 1;
            let page = entry.page_id;
            self.store.set_slot(page, slot, occupied)?;
            self.live += 1;
            return Ok(InsertStatus::Inserted);
        }

        let needs_page = chain.entries.last().is_none_or(ChainEntry::is_full);
        if needs_page {
            let page = self.book.allocator.allocate()?;
            let capacity = self.page_capacity();
            self.store.put(page, RowImage::empty(capacity));
            self.book.chains[bucket]
                .entries
                .push(ChainEntry::new(page, SlotRange::new(0, capacity)));
        }
        let entry = self.book.chains[bucket]
            .entries
            .last_mut()
            .expect("chain has a page with room");
        let slot = entry.range.start + entry.filled;
        entry.filled += 1;
        let page = entry.page_id;
        self.store.set_slot(page, slot, occupied)?;
        self.live += 1;
        Ok(InsertStatus::Inserted)
    }

    /// Replaces `key` with a tombstone. Returns whether it was present.
    pub fn delete(&mut self, key: u32) -> Result<bool> {
        let bucket = self.bucket_of(key)?;
        let Some((i, slot)) = self.locate(bucket, key) else {
            return Ok(false);
        };
        let entry = &mut self.book.chains[bucket].entries[i];
        entry.tombstones += 1;
        let page = entry.page_id;
        self.store.set_slot(page, slot, Slot::Tombstone)?;
        self.live -= 1;
        Ok(true)
    }

    /// Functional lookup without any timing model.
    pub fn get(&self, key: u32) -> Result<Option<u32>> {
        let bucket = self.bucket_of(key)?;
        Ok(self.locate(bucket, key).map(|(i, slot)| {
            let page = self.book.chains[bucket].entries[i].page_id;
            self.row(page).raw(slot).1
        }))
    }

    /// Commands a probe of `key` may issue, in chain order.
    pub fn probe_commands(&self, key: u32) -> Result<Vec<ProbeCommand>> {
        let bucket = self.bucket_of(key)?;
        Ok(self.book.chains[bucket]
            .entries
            .iter()
            .map(|e| ProbeCommand {
                key,
                page_id: e.page_id,
                range: e.range,
            })
            .collect())
    }

    /// Walks the key's chain through `engine`, stopping at the first page that
    /// holds the key. The first command is issued no earlier than `issue_at`;
    /// each later one waits for its predecessor.
    pub fn probe_with<E: ProbeEngine + ?Sized>(
        &self,
        key: u32,
        engine: &mut E,
        issue_at: f64,
    ) -> Result<ChainProbe> {
        let mut out = ChainProbe::default();
        let mut ready = issue_at;
        for cmd in self.probe_commands(key)? {
            let r = engine.probe_page(&self.store, &cmd, ready)?;
            ready = r.end_ns;
            out.latency_ns += r.latency_ns;
            out.commands += 1;
            out.pe_ticks += r.pe_ticks;
            out.trace.extend_from_slice(&r.trace);
            if let Some(v) = r.value() {
                out.value = Some(v);
                break;
            }
        }
        Ok(out)
    }

    pub fn bucket_histogram(&self) -> BucketHistogram {
        BucketHistogram::from_lengths(self.book.chains.iter().map(PageChain::live).collect())
    }

    /// Packs under-utilized buckets into shared pages.
    ///
    /// A bucket is a candidate when it owns exactly one whole page and holds
    /// between 1 and `threshold` live pairs. Candidates are packed first-fit in
    /// decreasing size; each page that ends up hosting two or more buckets is
    /// rewritten with one contiguous, tombstone-free range per bucket, and the
    /// pages the guests vacated are freed.
    pub fn co_locate_buckets(&mut self, threshold: usize) -> Result<RelocationReport> {
        let capacity = self.page_capacity();
        let mut candidates: Vec<(usize, usize)> = self
            .book
            .chains
            .iter()
            .enumerate()
            .filter_map(|(b, chain)| match chain.entries.as_slice() {
                [e] if e.range == SlotRange::new(0, capacity)
                    && e.live() >= 1
                    && e.live() <= threshold =>
                {
                    Some((b, e.live()))
                }
                _ => None,
            })
            .collect();
        candidates.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));

        let mut bins: Vec<(usize, Vec<usize>)> = Vec::new();
        for (bucket, live) in candidates {
            match bins.iter_mut().find(|(used, _)| used + live <= capacity) {
                Some((used, members)) => {
                    *used += live;
                    members.push(bucket);
                }
                None => bins.push((live, vec![bucket])),
            }
        }

        let mut report = RelocationReport::default();
        for (_, members) in bins.into_iter().filter(|(_, m)| m.len() >= 2) {
            let host = self.book.chains[members[0]].entries[0].page_id;
            let mut row = RowImage::empty(capacity);
            let mut offset = 0;
            let mut shared = SharedPage {
                page_id: host,
                buckets: Vec::with_capacity(members.len()),
            };
            for &bucket in &members {
                let entry = self.book.chains[bucket].entries[0];
                let pairs: Vec<Slot> = entry
                    .filled_slots()
                    .map(|i| self.row(entry.page_id).slot(i))
                    .filter(|s| matches!(s, Slot::Occupied { .. }))
                    .collect();
                let range = SlotRange::new(offset, offset + pairs.len());
                for (i, s) in pairs.into_iter().enumerate() {
                    row.set(offset + i, s)?;
                }
                offset = range.end;
                if entry.page_id != host {
                    self.store.remove(entry.page_id);
                    self.book.allocator.release(entry.page_id);
                    report.pages_freed += 1;
                }
                let mut moved = ChainEntry::new(host, range);
                moved.filled = range.len();
                self.book.chains[bucket].entries = vec![moved];
                shared.buckets.push((bucket, range));
            }
            self.store.put(host, row);
            report.shared_pages.push(shared);
        }
        Ok(report)
    }

    /// Live pairs in bucket, chain and slot order. Together with
    /// [`HashMemMap::sidecar`] this reproduces the layout on import, minus
    /// tombstones.
    pub fn export_pairs(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.live);
        for chain in &self.book.chains {
            for e in &chain.entries {
                let row = self.row(e.page_id);
                out.extend(e.filled_slots().filter_map(|i| match row.slot(i) {
                    Slot::Occupied { key, value } => Some((key, value)),
                    _ => None,
                }));
            }
        }
        out
    }

    pub fn sidecar(&self) -> String {
        self.book.to_sidecar()
    }

    /// Rebuilds a map from exported pairs and a bookkeeping sidecar. Each pair
    /// fills the first chain entry of its bucket that still has room. Unused
    /// slots of non-final entries become tombstones.
    pub fn import(
        geometry: DramGeometry,
        hash: HashConfig,
        pairs: &[(u32, u32)],
        sidecar: &str,
    ) -> Result<Self> {
        let mut map = Self::new(geometry, hash)?;
        let capacity = map.page_capacity();
        let mut page_ranges: std::collections::HashMap<u64, Vec<SlotRange>> = Default::default();
        for (bucket, entries) in parse_sidecar(sidecar)? {
            let b = usize::try_from(bucket)
                .ok()
                .filter(|&b| b < map.bucket_count())
                .ok_or_else(|| Error::range("bucket", bucket, map.bucket_count() as u64))?;
            for (page, range) in entries {
                if range.end > capacity {
                    return Err(Error::range("slot range end", range.end as u64, capacity as u64));
                }
                let ranges = page_ranges.entry(page).or_default();
                if ranges.is_empty() {
                    map.book.allocator.claim(page)?;
                    map.store.put(page, RowImage::empty(capacity));
                }
                if ranges.iter().any(|r| r.overlaps(&range)) {
                    return Err(Error::Config(format!(
                        "page {page} range {range} overlaps another chain entry"
                    )));
                }
                ranges.push(range);
                map.book.chains[b].entries.push(ChainEntry::new(page, range));
            }
        }
        for &(key, value) in pairs {
            let bucket = map.bucket_of(key)?;
            if let Some((i, slot)) = map.locate(bucket, key) {
                let page = map.book.chains[bucket].entries[i].page_id;
                map.store.set_slot(page, slot, Slot::Occupied { key, value })?;
                continue;
            }
            let entry = map.book.chains[bucket]
                .entries
                .iter_mut()
                .find(|e| !e.is_full())
                .ok_or_else(|| {
                    Error::Capacity(format!("sidecar chain for bucket {bucket} has no room for key {key}"))
                })?;
            let slot = entry.range.start + entry.filled;
            entry.filled += 1;
            let page = entry.page_id;
            map.store.set_slot(page, slot, Slot::Occupied { key, value })?;
            map.live += 1;
        }
        // slots freed by deletes are not exported; they come back as tombstones
        for chain in &mut map.book.chains {
            let Some((_, body)) = chain.entries.split_last_mut() else { continue };
            for e in body {
                while !e.is_full() {
                    map.store.set_slot(e.page_id, e.range.start + e.filled, Slot::Tombstone)?;
                    e.filled += 1;
                    e.tombstones += 1;
                }
            }
        }
        map.check_invariants()
            .map_err(|e| Error::Config(format!("sidecar does not match the pairs: {e}")))?;
        Ok(map)
    }

    /// Checks every structural invariant; returns a description of the first
    /// violation.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let capacity = self.page_capacity();
        let mut page_ranges: std::collections::HashMap<u64, Vec<SlotRange>> = Default::default();
        let mut live = 0;
        for (bucket, chain) in self.book.chains.iter().enumerate() {
            for (i, e) in chain.entries.iter().enumerate() {
                if e.range.is_empty() || e.range.end > capacity {
                    return Err(format!("bucket {bucket}: bad range {}", e.range));
                }
                if e.filled > e.range.len() || e.tombstones > e.filled {
                    return Err(format!("bucket {bucket}: counters out of range"));
                }
                if i + 1 < chain.entries.len() && !e.is_full() {
                    return Err(format!("bucket {bucket}: non-final page {} not full", e.page_id));
                }
                let ranges = page_ranges.entry(e.page_id).or_default();
                if ranges.iter().any(|r| r.overlaps(&e.range)) {
                    return Err(format!("page {}: overlapping ranges", e.page_id));
                }
                ranges.push(e.range);
                let Some(row) = self.store.row(e.page_id) else {
                    return Err(format!("page {} not allocated", e.page_id));
                };
                let mut tombs = 0;
                for s in e.range.as_range() {
                    let filled = s < e.range.start + e.filled;
                    match row.slot(s) {
                        Slot::Empty if filled => return Err(format!("page {}: hole at {s}", e.page_id)),
                        Slot::Empty => {}
                        _ if !filled => return Err(format!("page {}: data past fill at {s}", e.page_id)),
                        Slot::Tombstone => tombs += 1,
                        Slot::Occupied { key, .. } => {
                            if hash_key(key, &self.hash).ok() != Some(bucket as u64) {
                                return Err(format!("key {key} stored in wrong bucket {bucket}"));
                            }
                            live += 1;
                        }
                    }
                }
                if tombs != e.tombstones {
                    return Err(format!("page {}: tombstone count mismatch", e.page_id));
                }
            }
        }
        for (page, ranges) in &page_ranges {
            if ranges.iter().map(SlotRange::len).sum::<usize>() > capacity {
                return Err(format!("page {page} over capacity"));
            }
        }
        if live != self.live {
            return Err(format!("live count {} != stored {live}", self.live));
        }
        if page_ranges.len() as u64 != self.book.pages_in_use() || page_ranges.len() != self.store.len() {
            return Err("allocator, store and chains disagree on pages in use".into());
        }
        Ok(())
    }
}
