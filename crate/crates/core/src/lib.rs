//! Cycle-approximate model of a subarray-level processing-in-memory hashmap.
//!
//! Hash buckets live one per DRAM page (a rank-wide subarray row). A rank-level
//! unit activates the bucket's row and lets a processing element next to the
//! row buffer find the key, so only a single 64-byte line crosses the memory
//! bus per probe. The crate models:
//!
//! - [`dram`]: geometry, row-buffer state, command timing and a trace checker;
//! - [`pe`]: the area-optimized (element-serial) and performance-optimized
//!   (bit-serial over bit planes) processing elements;
//! - [`rlu`]: probe command execution, cache-line padding and batch scheduling;
//! - [`map`]: hashing, page-granularity buckets with overflow chains, tombstones
//!   and bucket co-location;
//! - [`backends`]: a uniform interface over the simulated and software hashmaps,
//!   including a from-scratch hopscotch table;
//! - [`workload`]: datasets, the probe microbenchmark and CSV/JSON reports.

pub mod backends;
pub mod dram;
pub mod error;
pub mod map;
pub mod pe;
pub mod rlu;
pub mod workload;

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};

/// Bytes per stored pair: a 32-bit key and a 32-bit value.
pub const KV_PAIR_BYTES: usize = 8;
pub const CACHE_LINE_BYTES: usize = 64;

/// Half-open range of slot indices within a page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotRange {
    pub start: usize,
    pub end: usize,
}

impl SlotRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn as_range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn overlaps(&self, other: &SlotRange) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl fmt::Display for SlotRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}
