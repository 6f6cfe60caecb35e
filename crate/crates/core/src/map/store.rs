use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::pe::{RowImage, Slot};

/// Backing contents of every allocated page, with a per-page write version so
/// derived layouts (bit planes) can be cached.
#[derive(Debug, Clone, Default)]
pub struct PageStore {
    pages: HashMap<u64, (u64, RowImage)>,
    writes: u64,
}

impl PageStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn row(&self, page_id: u64) -> Option<&RowImage> {
        self.pages.get(&page_id).map(|(_, r)| r)
    }

    /// Changes whenever the page is written.
    pub fn version(&self, page_id: u64) -> u64 {
        self.pages.get(&page_id).map_or(0, |(v, _)| *v)
    }

    pub fn put(&mut self, page_id: u64, row: RowImage) {
        self.writes += 1;
        self.pages.insert(page_id, (self.writes, row));
    }

    pub fn remove(&mut self, page_id: u64) -> Option<RowImage> {
        self.pages.remove(&page_id).map(|(_, r)| r)
    }

    pub fn set_slot(&mut self, page_id: u64, index: usize, slot: Slot) -> Result<()> {
        self.writes += 1;
        let (version, row) = self
            .pages
            .get_mut(&page_id)
            .ok_or_else(|| Error::range("unallocated page", page_id, 0))?;
        *version = self.writes;
        row.set(index, slot)
    }

    pub fn len(&self) -> usize {
        self.pages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pages.is_empty()
    }
}

/// Hands out page ids in `[0, limit)`, lowest free id first.
#[derive(Debug, Clone)]
pub struct PageAllocator {
    limit: u64,
    next: u64,
    free: BTreeSet<u64>,
}

impl PageAllocator {
    pub fn new(limit: u64) -> Self {
        Self {
            limit,
            next: 0,
            free: BTreeSet::new(),
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn allocate(&mut self) -> Result<u64> {
        if let Some(id) = self.free.pop_first() {
            return Ok(id);
        }
        if self.next >= self.limit {
            return Err(Error::AllocationFailed(self.limit));
        }
        self.next += 1;
        Ok(self.next - 1)
    }

    /// Marks a specific page as in use (used when importing a layout).
    pub fn claim(&mut self, id: u64) -> Result<()> {
        if id >= self.limit {
            return Err(Error::range("page", id, self.limit));
        }
        if id < self.next {
            if !self.free.remove(&id) {
                return Err(Error::Config(format!("page {id} is already in use")));
            }
        } else {
            self.free.extend(self.next..id);
            self.next = id + 1;
        }
        Ok(())
    }

    pub fn release(&mut self, id: u64) {
        debug_assert!(id < self.next && !self.free.contains(&id));
        self.free.insert(id);
    }

    pub fn in_use(&self) -> u64 {
        self.next - self.free.len() as u64
    }
}
