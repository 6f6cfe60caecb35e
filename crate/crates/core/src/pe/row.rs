use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::KV_PAIR_BYTES;

/// Key reserved to mark a never-used slot.
pub const EMPTY_KEY: u32 = 0xFFFF_FFFE;
/// Key reserved to mark a deleted slot.
pub const TOMBSTONE_KEY: u32 = 0xFFFF_FFFF;

pub fn is_sentinel(key: u32) -> bool {
    key >= EMPTY_KEY
}

pub fn check_key(key: u32) -> Result<()> {
    if is_sentinel(key) {
        Err(Error::SentinelKey(key))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    Empty,
    Occupied { key: u32, value: u32 },
    Tombstone,
}

impl Slot {
    fn raw(self) -> (u32, u32) {
        match self {
            Slot::Empty => (EMPTY_KEY, 0),
            Slot::Tombstone => (TOMBSTONE_KEY, 0),
            Slot::Occupied { key, value } => (key, value),
        }
    }

    fn from_raw(key: u32, value: u32) -> Slot {
        match key {
            EMPTY_KEY => Slot::Empty,
            TOMBSTONE_KEY => Slot::Tombstone,
            key => Slot::Occupied { key, value },
        }
    }

    pub fn is_empty(self) -> bool {
        matches!(self, Slot::Empty)
    }
}

/// Element-oriented image of one subarray row: `capacity` key/value pairs, the
/// slot state carried by sentinel keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowImage {
    slots: Vec<(u32, u32)>,
}

impl RowImage {
    pub fn empty(capacity: usize) -> Self {
        Self {
            slots: vec![Slot::Empty.raw(); capacity],
        }
    }

    pub fn from_slots(slots: impl IntoIterator<Item = Slot>) -> Result<Self> {
        let slots = slots
            .into_iter()
            .map(|s| {
                if let Slot::Occupied { key, .. } = s {
                    check_key(key)?;
                }
                Ok(s.raw())
            })
            .collect::<Result<_>>()?;
        Ok(Self { slots })
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn slot(&self, index: usize) -> Slot {
        let (k, v) = self.slots[index];
        Slot::from_raw(k, v)
    }

    pub fn set(&mut self, index: usize, slot: Slot) -> Result<()> {
        if let Slot::Occupied { key, .. } = slot {
            check_key(key)?;
        }
        let cap = self.slots.len();
        let cell = self
            .slots
            .get_mut(index)
            .ok_or_else(|| Error::range("slot", index as u64, cap as u64))?;
        *cell = slot.raw();
        Ok(())
    }

    pub fn slots(&self) -> impl ExactSizeIterator<Item = Slot> + '_ {
        self.slots.iter().map(|&(k, v)| Slot::from_raw(k, v))
    }

    pub(crate) fn raw(&self, index: usize) -> (u32, u32) {
        self.slots[index]
    }

    /// First slot in `range` whose raw key equals `key` (sentinels included).
    pub(crate) fn find_raw(&self, range: std::ops::Range<usize>, key: u32) -> Option<usize> {
        let start = range.start;
        self.slots[range]
            .iter()
            .position(|&(k, _)| k == key)
            .map(|i| start + i)
    }

    /// Little-endian `key, value` records; `capacity * 8` bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.slots.len() * KV_PAIR_BYTES);
        for &(k, v) in &self.slots {
            out.extend_from_slice(&k.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses a physical row image. Empty and tombstone slots must carry a zero value.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(KV_PAIR_BYTES) {
            return Err(Error::Dataset(format!(
                "row image of {} bytes is not a whole number of slots",
                bytes.len()
            )));
        }
        let mut slots = Vec::with_capacity(bytes.len() / KV_PAIR_BYTES);
        for (i, rec) in bytes.chunks_exact(KV_PAIR_BYTES).enumerate() {
            let k = u32::from_le_bytes(rec[..4].try_into().unwrap());
            let v = u32::from_le_bytes(rec[4..].try_into().unwrap());
            if is_sentinel(k) && v != 0 {
                return Err(Error::Dataset(format!(
                    "slot {i} is not occupied but carries value {v:#x}"
                )));
            }
            slots.push((k, v));
        }
        Ok(Self { slots })
    }
}

/// Packs `pairs` into the leading slots of a `capacity`-slot row.
pub fn encode_row(pairs: &[(u32, u32)], capacity: usize) -> Result<RowImage> {
    if pairs.len() > capacity {
        return Err(Error::Capacity(format!(
            "{} pairs do not fit in a {capacity}-slot row",
            pairs.len()
        )));
    }
    let mut row = RowImage::empty(capacity);
    for (i, &(key, value)) in pairs.iter().enumerate() {
        row.set(i, Slot::Occupied { key, value })?;
    }
    Ok(row)
}

/// Occupied pairs in slot order.
pub fn decode_row(row: &RowImage) -> Vec<(u32, u32)> {
    row.slots()
        .filter_map(|s| match s {
            Slot::Occupied { key, value } => Some((key, value)),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_examples() {
        let row = encode_row(&[], 4).unwrap();
        assert!(row.slots().all(Slot::is_empty));
        assert_eq!(row.capacity(), 4);

        let row = encode_row(&[(5, 50), (7, 70)], 4).unwrap();
        let slots: Vec<_> = row.slots().collect();
        assert_eq!(
            slots,
            [
                Slot::Occupied { key: 5, value: 50 },
                Slot::Occupied { key: 7, value: 70 },
                Slot::Empty,
                Slot::Empty
            ]
        );
    }

    #[test]
    fn encode_errors() {
        assert!(matches!(
            encode_row(&[(EMPTY_KEY, 1)], 4),
            Err(Error::SentinelKey(_))
        ));
        assert!(matches!(
            encode_row(&[(TOMBSTONE_KEY, 1)], 4),
            Err(Error::SentinelKey(_))
        ));
        assert!(matches!(
            encode_row(&[(1, 1), (2, 2)], 1),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn byte_image_size_and_sentinels() {
        let mut row = encode_row(&[(5, 50)], 1024).unwrap();
        row.set(1, Slot::Tombstone).unwrap();
        let bytes = row.to_bytes();
        assert_eq!(bytes.len(), 8192);
        assert_eq!(&bytes[..8], &[5, 0, 0, 0, 50, 0, 0, 0]);
        assert_eq!(&bytes[8..12], &TOMBSTONE_KEY.to_le_bytes());
        assert_eq!(&bytes[16..20], &EMPTY_KEY.to_le_bytes());
        assert_eq!(RowImage::from_bytes(&bytes).unwrap(), row);
    }

    #[test]
    fn from_bytes_rejects_malformed() {
        assert!(RowImage::from_bytes(&[0; 7]).is_err());
        let mut bytes = RowImage::empty(2).to_bytes();
        bytes[4] = 1;
        assert!(RowImage::from_bytes(&bytes).is_err());
    }

    #[test]
    fn random_1024_pairs_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pairs: Vec<(u32, u32)> = (0..1024)
            .map(|_| (rng.gen_range(0..EMPTY_KEY), rng.gen()))
            .collect();
        assert_eq!(decode_row(&encode_row(&pairs, 1024).unwrap()), pairs);
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(
            pairs in prop::collection::vec((0..EMPTY_KEY, any::<u32>()), 0..64),
            extra in 0usize..8,
        ) {
            let row = encode_row(&pairs, pairs.len() + extra).unwrap();
            prop_assert_eq!(decode_row(&row), pairs);
            prop_assert_eq!(RowImage::from_bytes(&row.to_bytes()).unwrap(), row);
        }
    }
}
