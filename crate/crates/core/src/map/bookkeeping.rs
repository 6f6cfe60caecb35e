//! Bucket → page chain records and their line-oriented sidecar format:
//!
//! ```text
//! 12: 3[0,1024) 17[0,1024)
//! 40: 5[0,7)
//! ```
//!
//! One line per bucket that owns pages, in chain order.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SlotRange;

use super::store::PageAllocator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainEntry {
    pub page_id: u64,
    pub range: SlotRange,
    /// Non-empty slots, packed from `range.start`.
    pub(crate) filled: usize,
    pub(crate) tombstones: usize,
}

impl ChainEntry {
    pub(crate) fn new(page_id: u64, range: SlotRange) -> Self {
        Self {
            page_id,
            range,
            filled: 0,
            tombstones: 0,
        }
    }

    pub fn filled(&self) -> usize {
        self.filled
    }

    pub fn tombstones(&self) -> usize {
        self.tombstones
    }

    pub fn live(&self) -> usize {
        self.filled - self.tombstones
    }

    pub fn is_full(&self) -> bool {
        self.filled == self.range.len()
    }

    /// Slot indices holding live pairs or tombstones.
    pub fn filled_slots(&self) -> std::ops::Range<usize> {
        self.range.start..self.range.start + self.filled
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageChain {
    pub(crate) entries: Vec<ChainEntry>,
}

impl PageChain {
    pub fn entries(&self) -> &[ChainEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn live(&self) -> usize {
        self.entries.iter().map(ChainEntry::live).sum()
    }

    pub fn filled(&self) -> usize {
        self.entries.iter().map(|e| e.filled).sum()
    }
}

#[derive(Debug, Clone)]
pub struct Bookkeeping {
    pub(crate) chains: Vec<PageChain>,
    pub(crate) allocator: PageAllocator,
}

impl Bookkeeping {
    pub fn new(bucket_count: usize, page_limit: u64) -> Self {
        Self {
            chains: vec![PageChain::default(); bucket_count],
            allocator: PageAllocator::new(page_limit),
        }
    }

    pub fn chain(&self, bucket: usize) -> &PageChain {
        &self.chains[bucket]
    }

    pub fn chains(&self) -> &[PageChain] {
        &self.chains
    }

    pub fn pages_in_use(&self) -> u64 {
        self.allocator.in_use()
    }

    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        for (bucket, chain) in self.chains.iter().enumerate() {
            if chain.is_empty() {
                continue;
            }
            let _ = write!(out, "{bucket}:");
            for e in &chain.entries {
                let _ = write!(out, " {}{}", e.page_id, e.range);
            }
            out.push('\n');
        }
        out
    }
}

/// One sidecar line: a bucket and its chain of `(page, range)` pairs.
pub type SidecarChain = (u64, Vec<(u64, SlotRange)>);

fn parse_entry(token: &str, line: usize) -> Result<(u64, SlotRange)> {
    let bad = || Error::parse(line, format!("bad chain entry `{token}`"));
    let (page, rest) = token.split_once('[').ok_or_else(bad)?;
    let bounds = rest.strip_suffix(')').ok_or_else(bad)?;
    let (start, end) = bounds.split_once(',').ok_or_else(bad)?;
    let num = |s: &str| -> Result<u64> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        s.parse().map_err(|_| bad())
    };
    let page = num(page)?;
    let start = usize::try_from(num(start)?).map_err(|_| bad())?;
    let end = usize::try_from(num(end)?).map_err(|_| bad())?;
    if start >= end {
        return Err(Error::parse(line, format!("empty range in `{token}`")));
    }
    Ok((page, SlotRange::new(start, end)))
}

/// Parses a sidecar. Checks syntax and that each bucket appears once; layout
/// checks against a geometry happen on import.
pub fn parse_sidecar(text: &str) -> Result<Vec<SidecarChain>> {
    let mut chains: Vec<SidecarChain> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (bucket, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(line_no, "expected `bucket: entries`"))?;
        let bucket = bucket.trim();
        if bucket.is_empty() || !bucket.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::parse(line_no, format!("bad bucket id `{bucket}`")));
        }
        let bucket: u64 = bucket
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad bucket id `{bucket}`")))?;
        if !seen.insert(bucket) {
            return Err(Error::parse(line_no, format!("bucket {bucket} listed twice")));
        }
        let entries = rest
            .split_whitespace()
            .map(|tok| parse_entry(tok, line_no))
            .collect::<Result<Vec<_>>>()?;
        if entries.is_empty() {
            return Err(Error::parse(line_no, "bucket has no pages"));
        }
        chains.push((bucket, entries));
    }
    Ok(chains)
}
