use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::KV_PAIR_BYTES;

/// Physical DRAM hierarchy. Every simulated page is one rank-wide subarray row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DramGeometry {
    pub channels: u32,
    pub ranks_per_channel: u32,
    pub banks_per_rank: u32,
    pub subarrays_per_bank: u32,
    pub rows_per_subarray: u32,
    pub row_size_bytes: u32,
}

impl Default for DramGeometry {
    fn default() -> Self {
        Self {
            channels: 1,
            ranks_per_channel: 1,
            banks_per_rank: 8,
            subarrays_per_bank: 128,
            rows_per_subarray: 512,
            row_size_bytes: 8192,
        }
    }
}

/// Location of one subarray row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowAddress {
    pub channel: u32,
    pub rank: u32,
    pub bank: u32,
    pub subarray: u32,
    pub row: u32,
}

impl RowAddress {
    /// Identifies the bank this row lives in; commands to the same bank serialize.
    pub fn bank_id(&self) -> (u32, u32, u32) {
        (self.channel, self.rank, self.bank)
    }
}

impl DramGeometry {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("channels", self.channels),
            ("ranks_per_channel", self.ranks_per_channel),
            ("banks_per_rank", self.banks_per_rank),
            ("subarrays_per_bank", self.subarrays_per_bank),
            ("rows_per_subarray", self.rows_per_subarray),
            ("row_size_bytes", self.row_size_bytes),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.row_size_bytes as usize).is_multiple_of(KV_PAIR_BYTES) {
            return Err(Error::Config(format!(
                "row_size_bytes {} is not a multiple of {KV_PAIR_BYTES}",
                self.row_size_bytes
            )));
        }
        Ok(())
    }

    pub fn total_pages(&self) -> u64 {
        self.subarray_count() * self.rows_per_subarray as u64
    }

    pub fn subarray_count(&self) -> u64 {
        self.channels as u64
            * self.ranks_per_channel as u64
            * self.banks_per_rank as u64
            * self.subarrays_per_bank as u64
    }

    /// KV pairs that fit in one page.
    pub fn page_capacity(&self) -> usize {
        self.row_size_bytes as usize / KV_PAIR_BYTES
    }

    /// Dense index of the subarray holding `addr`, in `[0, subarray_count)`.
    pub fn subarray_index(&self, addr: &RowAddress) -> usize {
        let rank = addr.channel as u64 * self.ranks_per_channel as u64 + addr.rank as u64;
        let bank = rank * self.banks_per_rank as u64 + addr.bank as u64;
        (bank * self.subarrays_per_bank as u64 + addr.subarray as u64) as usize
    }

    pub fn contains(&self, addr: &RowAddress) -> bool {
        addr.channel < self.channels
            && addr.rank < self.ranks_per_channel
            && addr.bank < self.banks_per_rank
            && addr.subarray < self.subarrays_per_bank
            && addr.row < self.rows_per_subarray
    }
}

/// Bank-interleaved page placement: bank varies fastest, then subarray, row, rank
/// and channel.
pub fn map_page_to_row(page_id: u64, geometry: &DramGeometry) -> Result<RowAddress> {
    let total = geometry.total_pages();
    if page_id >= total {
        return Err(Error::range("page", page_id, total));
    }
    let mut rest = page_id;
    let mut digit = |radix: u32| {
        let d = (rest % radix as u64) as u32;
        rest /= radix as u64;
        d
    };
    let bank = digit(geometry.banks_per_rank);
    let subarray = digit(geometry.subarrays_per_bank);
    let row = digit(geometry.rows_per_subarray);
    let rank = digit(geometry.ranks_per_channel);
    let channel = digit(geometry.channels);
    Ok(RowAddress {
        channel,
        rank,
        bank,
        subarray,
        row,
    })
}

/// Inverse of [`map_page_to_row`].
pub fn row_to_page(addr: &RowAddress, geometry: &DramGeometry) -> Result<u64> {
    if !geometry.contains(addr) {
        return Err(Error::Config(format!("{addr:?} is outside the geometry")));
    }
    let g = geometry;
    let mut page = addr.channel as u64;
    page = page * g.ranks_per_channel as u64 + addr.rank as u64;
    page = page * g.rows_per_subarray as u64 + addr.row as u64;
    page = page * g.subarrays_per_bank as u64 + addr.subarray as u64;
    page = page * g.banks_per_rank as u64 + addr.bank as u64;
    Ok(page)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn addr(channel: u32, rank: u32, bank: u32, subarray: u32, row: u32) -> RowAddress {
        RowAddress {
            channel,
            rank,
            bank,
            subarray,
            row,
        }
    }

    #[test]
    fn default_geometry_shape() {
        let g = DramGeometry::default();
        g.validate().unwrap();
        assert_eq!(g.total_pages(), 8 * 128 * 512);
        assert_eq!(g.page_capacity(), 1024);
    }

    #[test]
    fn interleaved_examples() {
        let g = DramGeometry::default();
        assert_eq!(map_page_to_row(0, &g).unwrap(), addr(0, 0, 0, 0, 0));
        assert_eq!(map_page_to_row(3, &g).unwrap(), addr(0, 0, 3, 0, 0));
        assert_eq!(map_page_to_row(8, &g).unwrap(), addr(0, 0, 0, 1, 0));
        assert_eq!(map_page_to_row(8 * 128, &g).unwrap(), addr(0, 0, 0, 0, 1));
    }

    #[test]
    fn out_of_range_page() {
        let g = DramGeometry::default();
        assert!(matches!(
            map_page_to_row(g.total_pages(), &g),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn mapping_is_bijective_exhaustively() {
        let g = DramGeometry {
            channels: 2,
            ranks_per_channel: 2,
            banks_per_rank: 4,
            subarrays_per_bank: 8,
            rows_per_subarray: 16,
            row_size_bytes: 64,
        };
        let mut seen = std::collections::HashSet::new();
        for page in 0..g.total_pages() {
            let a = map_page_to_row(page, &g).unwrap();
            assert!(g.contains(&a));
            assert!(seen.insert(a));
            assert_eq!(row_to_page(&a, &g).unwrap(), page);
        }
    }

    #[test]
    fn rejects_degenerate_geometry() {
        let g = DramGeometry {
            banks_per_rank: 0,
            ..Default::default()
        };
        assert!(g.validate().is_err());
        let g = DramGeometry {
            row_size_bytes: 12,
            ..Default::default()
        };
        assert!(g.validate().is_err());
    }
}
