use std::collections::BTreeMap;

use crate::error::Result;
use crate::map::{hash_key, HashConfig, InsertStatus};

/// Separate chaining over a fixed number of buckets. Never rehashes.
#[derive(Debug, Clone)]
pub struct ChainedMap {
    buckets: Vec<Vec<(u32, u32)>>,
    hash: HashConfig,
    len: usize,
}

impl ChainedMap {
    pub fn new(bucket_count: usize) -> Result<Self> {
        let hash = HashConfig::new(bucket_count.max(1) as u64);
        hash.validate()?;
        Ok(Self {
            buckets: vec![Vec::new(); bucket_count.max(1)],
            hash,
            len: 0,
        })
    }

    fn bucket(&self, key: u32) -> Result<usize> {
        Ok(hash_key(key, &self.hash)? as usize)
    }

    pub fn insert(&mut self, key: u32, value: u32) -> Result<InsertStatus> {
        let b = self.bucket(key)?;
        let bucket = &mut self.buckets[b];
        if let Some(slot) = bucket.iter_mut().find(|(k, _)| *k == key) {
            slot.1 = value;
            return Ok(InsertStatus::Updated);
        }
        bucket.push((key, value));
        self.len += 1;
        Ok(InsertStatus::Inserted)
    }

    pub fn get(&self, key: u32) -> Result<Option<u32>> {
        let b = self.bucket(key)?;
        Ok(self.buckets[b].iter().find(|(k, _)| *k == key).map(|&(_, v)| v))
    }

    pub fn remove(&mut self, key: u32) -> Result<bool> {
        let b = self.bucket(key)?;
        let bucket = &mut self.buckets[b];
        match bucket.iter().position(|(k, _)| *k == key) {
            Some(i) => {
                bucket.swap_remove(i);
                self.len -= 1;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Ordered map baseline backed by the standard library B-tree.
#[derive(Debug, Clone, Default)]
pub struct TreeMap {
    inner: BTreeMap<u32, u32>,
}

impl TreeMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: u32, value: u32) -> Result<InsertStatus> {
        crate::pe::check_key(key)?;
        Ok(match self.inner.insert(key, value) {
            Some(_) => InsertStatus::Updated,
            None => InsertStatus::Inserted,
        })
    }

    pub fn get(&self, key: u32) -> Result<Option<u32>> {
        crate::pe::check_key(key)?;
        Ok(self.inner.get(&key).copied())
    }

    pub fn remove(&mut self, key: u32) -> Result<bool> {
        crate::pe::check_key(key)?;
        Ok(self.inner.remove(&key).is_some())
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }
}
