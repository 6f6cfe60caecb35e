//! Bit-plane (column-oriented) row layout used by the performance-optimized PE.
//!
//! Plane `i` holds bit `i` of every slot's key, one column per slot, plane 0
//! being the least significant bit. Occupancy and tombstone flags are kept as
//! two extra planes so the layout is lossless at any key width.

use crate::error::{Error, Result};

use super::row::{RowImage, Slot};

/// Fixed-length bit vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitPlane {
    words: Vec<u64>,
    len: usize,
}

impl BitPlane {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitSlicedRegion {
    key_planes: Vec<BitPlane>,
    value_planes: Vec<BitPlane>,
    occupancy: BitPlane,
    tombstones: BitPlane,
}

fn check_width(bits: u32) -> Result<()> {
    if (1..=64).contains(&bits) {
        Ok(())
    } else {
        Err(Error::Config(format!("bit width {bits} outside 1..=64")))
    }
}

fn fits(v: u32, bits: u32) -> bool {
    bits >= 32 || v >> bits == 0
}

impl BitSlicedRegion {
    /// Transposes `row`. Occupied keys and values must fit in the plane widths.
    pub fn from_row(row: &RowImage, key_bits: u32, value_bits: u32) -> Result<Self> {
        check_width(key_bits)?;
        check_width(value_bits)?;
        let n = row.capacity();
        let mut region = Self {
            key_planes: vec![BitPlane::zeros(n); key_bits as usize],
            value_planes: vec![BitPlane::zeros(n); value_bits as usize],
            occupancy: BitPlane::zeros(n),
            tombstones: BitPlane::zeros(n),
        };
        for (col, slot) in row.slots().enumerate() {
            match slot {
                Slot::Empty => {}
                Slot::Tombstone => region.tombstones.set(col, true),
                Slot::Occupied { key, value } => {
                    if !fits(key, key_bits) {
                        return Err(Error::TooWide {
                            value: key as u64,
                            bits: key_bits,
                        });
                    }
                    if !fits(value, value_bits) {
                        return Err(Error::TooWide {
                            value: value as u64,
                            bits: value_bits,
                        });
                    }
                    region.occupancy.set(col, true);
                    scatter(&mut region.key_planes, col, key);
                    scatter(&mut region.value_planes, col, value);
                }
            }
        }
        Ok(region)
    }

    pub fn to_row(&self) -> RowImage {
        let slots = (0..self.columns()).map(|col| {
            if self.occupancy.get(col) {
                Slot::Occupied {
                    key: self.key_at(col),
                    value: self.value_at(col),
                }
            } else if self.tombstones.get(col) {
                Slot::Tombstone
            } else {
                Slot::Empty
            }
        });
        RowImage::from_slots(slots).expect("occupied keys were validated on construction")
    }

    pub fn columns(&self) -> usize {
        self.occupancy.len()
    }

    pub fn key_bits(&self) -> u32 {
        self.key_planes.len() as u32
    }

    pub fn value_bits(&self) -> u32 {
        self.value_planes.len() as u32
    }

    pub fn key_plane(&self, i: usize) -> &BitPlane {
        &self.key_planes[i]
    }

    pub fn value_plane(&self, i: usize) -> &BitPlane {
        &self.value_planes[i]
    }

    pub fn occupancy(&self) -> &BitPlane {
        &self.occupancy
    }

    pub fn tombstones(&self) -> &BitPlane {
        &self.tombstones
    }

    pub fn key_at(&self, col: usize) -> u32 {
        gather(&self.key_planes, col)
    }

    pub fn value_at(&self, col: usize) -> u32 {
        gather(&self.value_planes, col)
    }
}

fn scatter(planes: &mut [BitPlane], col: usize, v: u32) {
    for (i, plane) in planes.iter_mut().enumerate().take(32) {
        if v >> i & 1 == 1 {
            plane.set(col, true);
        }
    }
}

fn gather(planes: &[BitPlane], col: usize) -> u32 {
    planes
        .iter()
        .take(32)
        .enumerate()
        .fold(0, |acc, (i, p)| acc | (p.get(col) as u32) << i)
}

pub fn bitslice_encode(row: &RowImage, key_bits: u32, value_bits: u32) -> Result<BitSlicedRegion> {
    BitSlicedRegion::from_row(row, key_bits, value_bits)
}

pub fn bitslice_decode(region: &BitSlicedRegion) -> RowImage {
    region.to_row()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pe::row::{encode_row, EMPTY_KEY};
    use proptest::prelude::*;

    fn bits(p: &BitPlane) -> Vec<u8> {
        (0..p.len()).map(|i| p.get(i) as u8).collect()
    }

    #[test]
    fn toy_two_bit_planes() {
        let row = encode_row(&[(0b01, 0), (0b10, 0)], 2).unwrap();
        let region = bitslice_encode(&row, 2, 1).unwrap();
        assert_eq!(bits(region.key_plane(0)), [1, 0]);
        assert_eq!(bits(region.key_plane(1)), [0, 1]);
    }

    #[test]
    fn empty_row_has_no_occupancy() {
        let region = bitslice_encode(&RowImage::empty(1024), 32, 32).unwrap();
        assert_eq!(region.occupancy().count_ones(), 0);
        assert_eq!(region.columns(), 1024);
    }

    #[test]
    fn too_wide_key_is_rejected() {
        let row = encode_row(&[(16, 0)], 4).unwrap();
        assert!(matches!(
            bitslice_encode(&row, 4, 4),
            Err(Error::TooWide { .. })
        ));
    }

    #[test]
    fn wide_planes_are_zero_above_32_bits() {
        let row = encode_row(&[(u32::MAX - 2, u32::MAX)], 3).unwrap();
        let region = bitslice_encode(&row, 64, 64).unwrap();
        assert_eq!(region.key_plane(40).count_ones(), 0);
        assert_eq!(region.key_at(0), u32::MAX - 2);
        assert_eq!(region.value_at(0), u32::MAX);
        assert_eq!(bitslice_decode(&region), row);
    }

    fn slot_strategy() -> impl Strategy<Value = Slot> {
        prop_oneof![
            Just(Slot::Empty),
            Just(Slot::Tombstone),
            (0..EMPTY_KEY, any::<u32>()).prop_map(|(key, value)| Slot::Occupied { key, value }),
        ]
    }

    #[test]
    fn random_1024_slot_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let slots = (0..1024).map(|_| match rng.gen_range(0..4) {
            0 => Slot::Empty,
            1 => Slot::Tombstone,
            _ => Slot::Occupied {
                key: rng.gen_range(0..EMPTY_KEY),
                value: rng.gen(),
            },
        });
        let row = RowImage::from_slots(slots).unwrap();
        let region = bitslice_encode(&row, 32, 32).unwrap();
        assert_eq!(bitslice_decode(&region), row);
    }

    proptest! {
        #[test]
        fn round_trip_preserves_slot_states(slots in prop::collection::vec(slot_strategy(), 0..200)) {
            let row = RowImage::from_slots(slots).unwrap();
            let region = bitslice_encode(&row, 32, 32).unwrap();
            for (col, slot) in row.slots().enumerate() {
                if let Slot::Occupied { key, .. } = slot {
                    for i in 0..32 {
                        prop_assert_eq!(region.key_plane(i).get(col), key >> i & 1 == 1);
                    }
                }
            }
            prop_assert_eq!(bitslice_decode(&region), row);
        }
    }
}
