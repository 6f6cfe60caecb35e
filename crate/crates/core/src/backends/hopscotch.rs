//! Open-addressing hopscotch hashing. Every key lives within `H - 1` slots
//! (circularly) of its home bucket; `hop_info[b]` bit `j` marks that slot
//! `b + j` holds a key whose home is `b`.

use crate::error::{Error, Result};
use crate::map::{hash_key, HashConfig, InsertStatus};

pub const DEFAULT_NEIGHBORHOOD: usize = 32;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Entry {
    key: u32,
    value: u32,
    occupied: bool,
}

#[derive(Debug, Clone)]
pub struct HopscotchTable {
    slots: Vec<Entry>,
    hop_info: Vec<u64>,
    neighborhood: usize,
    hash: HashConfig,
    len: usize,
}

impl HopscotchTable {
    pub fn new(capacity: usize) -> Result<Self> {
        Self::with_neighborhood(capacity, DEFAULT_NEIGHBORHOOD)
    }

    /// `neighborhood` must be in `1..=64` and no larger than `capacity`.
    pub fn with_neighborhood(capacity: usize, neighborhood: usize) -> Result<Self> {
        if !(1..=64).contains(&neighborhood) {
            return Err(Error::Config(format!("neighborhood {neighborhood} not in 1..=64")));
        }
        if capacity < neighborhood {
            return Err(Error::Config(format!(
                "capacity {capacity} smaller than neighborhood {neighborhood}"
            )));
        }
        Ok(Self {
            slots: vec![Entry::default(); capacity],
            hop_info: vec![0; capacity],
            neighborhood,
            hash: HashConfig::new(capacity as u64),
            len: 0,
        })
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn neighborhood(&self) -> usize {
        self.neighborhood
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn load_factor(&self) -> f64 {
        self.len as f64 / self.capacity() as f64
    }

    pub fn home(&self, key: u32) -> Result<usize> {
        Ok(hash_key(key, &self.hash)? as usize)
    }

    fn wrap(&self, i: usize) -> usize {
        i % self.slots.len()
    }

    /// Circular distance from `from` forward to `to`.
    fn distance(&self, from: usize, to: usize) -> usize {
        (to + self.slots.len() - from) % self.slots.len()
    }

    fn find_slot(&self, home: usize, key: u32) -> Option<usize> {
        let mut bits = self.hop_info[home];
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            let slot = self.wrap(home + j);
            if self.slots[slot].key == key {
                return Some(slot);
            }
            bits &= bits - 1;
        }
        None
    }

    pub fn get(&self, key: u32) -> Result<Option<u32>> {
        let home = self.home(key)?;
        Ok(self.find_slot(home, key).map(|s| self.slots[s].value))
    }

    /// Fails with [`Error::TableFull`] when no free slot can be moved into the
    /// key's neighborhood; the table is left unchanged apart from any
    /// displacements already made, all of which preserve the invariant.
    pub fn insert(&mut self, key: u32, value: u32) -> Result<InsertStatus> {
        let home = self.home(key)?;
        if let Some(slot) = self.find_slot(home, key) {
            self.slots[slot].value = value;
            return Ok(InsertStatus::Updated);
        }
        let cap = self.capacity();
        let mut free = (0..cap)
            .map(|d| self.wrap(home + d))
            .find(|&s| !self.slots[s].occupied)
            .ok_or(Error::TableFull)?;

        while self.distance(home, free) >= self.neighborhood {
            free = self.displace_toward(free).ok_or(Error::TableFull)?;
        }
        self.slots[free] = Entry { key, value, occupied: true };
        self.hop_info[home] |= 1 << self.distance(home, free);
        self.len += 1;
        Ok(InsertStatus::Inserted)
    }

    /// Moves some key from the `H - 1` slots before `free` into `free`,
    /// keeping it inside its own neighborhood. Returns the vacated slot.
    fn displace_toward(&mut self, free: usize) -> Option<usize> {
        let h = self.neighborhood;
        for back in (1..h).rev() {
            let base = self.wrap(free + self.capacity() - back);
            // keys of `base` sitting before `free`, i.e. at offsets < back
            let candidates = self.hop_info[base] & ((1u64 << back) - 1);
            if candidates == 0 {
                continue;
            }
            let j = candidates.trailing_zeros() as usize;
            let from = self.wrap(base + j);
            self.slots[free] = self.slots[from];
            self.slots[from] = Entry::default();
            self.hop_info[base] &= !(1 << j);
            self.hop_info[base] |= 1 << back;
            return Some(from);
        }
        None
    }

    pub fn remove(&mut self, key: u32) -> Result<bool> {
        let home = self.home(key)?;
        let Some(slot) = self.find_slot(home, key) else {
            return Ok(false);
        };
        self.slots[slot] = Entry::default();
        self.hop_info[home] &= !(1 << self.distance(home, slot));
        self.len -= 1;
        Ok(true)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.slots.iter().filter(|e| e.occupied).map(|e| (e.key, e.value))
    }

    /// Verifies the neighborhood invariant in both directions.
    pub fn check_invariant(&self) -> std::result::Result<(), String> {
        let mut count = 0;
        for (slot, e) in self.slots.iter().enumerate() {
            if !e.occupied {
                continue;
            }
            count += 1;
            let home = self.home(e.key).map_err(|err| err.to_string())?;
            let d = self.distance(home, slot);
            if d >= self.neighborhood {
                return Err(format!("key {} at slot {slot} is {d} from home {home}", e.key));
            }
            if self.hop_info[home] & (1 << d) == 0 {
                return Err(format!("hop bit {d} of bucket {home} clear for key {}", e.key));
            }
        }
        for (home, &bits) in self.hop_info.iter().enumerate() {
            if self.neighborhood < 64 && bits >> self.neighborhood != 0 {
                return Err(format!("bucket {home} has bits beyond the neighborhood"));
            }
            let mut b = bits;
            while b != 0 {
                let j = b.trailing_zeros() as usize;
                let e = self.slots[self.wrap(home + j)];
                if !e.occupied || self.home(e.key).ok() != Some(home) {
                    return Err(format!("bucket {home} bit {j} does not point at one of its keys"));
                }
                b &= b - 1;
            }
        }
        if count != self.len {
            return Err(format!("len {} but {count} occupied slots", self.len));
        }
        Ok(())
    }
}

/// A [`HopscotchTable`] that doubles and rehashes whenever an insert reports
/// the table full.
#[derive(Debug, Clone)]
pub struct HopscotchMap {
    table: HopscotchTable,
}

impl HopscotchMap {
    pub fn new(capacity: usize) -> Result<Self> {
        Self::with_neighborhood(capacity, DEFAULT_NEIGHBORHOOD)
    }

    pub fn with_neighborhood(capacity: usize, neighborhood: usize) -> Result<Self> {
        Ok(Self {
            table: HopscotchTable::with_neighborhood(capacity.max(neighborhood), neighborhood)?,
        })
    }

    pub fn table(&self) -> &HopscotchTable {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, key: u32) -> Result<Option<u32>> {
        self.table.get(key)
    }

    pub fn remove(&mut self, key: u32) -> Result<bool> {
        self.table.remove(key)
    }

    pub fn insert(&mut self, key: u32, value: u32) -> Result<InsertStatus> {
        loop {
            match self.table.insert(key, value) {
                Err(Error::TableFull) => self.grow()?,
                other => return other,
            }
        }
    }

    fn grow(&mut self) -> Result<()> {
        let mut capacity = self.table.capacity() * 2;
        'retry: loop {
            let mut next = HopscotchTable::with_neighborhood(capacity, self.table.neighborhood)?;
            for (k, v) in self.table.iter() {
                if let Err(Error::TableFull) = next.insert(k, v) {
                    capacity *= 2;
                    continue 'retry;
                }
            }
            self.table = next;
            return Ok(());
        }
    }
}
