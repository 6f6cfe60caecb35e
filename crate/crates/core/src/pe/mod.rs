//! Subarray processing elements: row layouts, match semantics and tick costs.

mod bitslice;
mod row;
mod scan;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bitslice::{bitslice_decode, bitslice_encode, BitPlane, BitSlicedRegion};
pub use row::{check_key, decode_row, encode_row, is_sentinel, RowImage, Slot, EMPTY_KEY, TOMBSTONE_KEY};
pub use scan::{area_scan, perf_scan, MatchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PeVariant {
    /// One PE per subarray, one key/value pair compared per tick.
    AreaOptimized,
    /// Comparators under every column of the row buffer, one key bit per tick.
    PerfOptimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeConfig {
    pub variant: PeVariant,
    pub key_bits: u32,
    pub value_bits: u32,
    /// Whole-key comparison in a single tick (perf-optimized only).
    pub cam_mode: bool,
    pub include_value_readout_ticks: bool,
}

impl PeConfig {
    pub fn area_optimized() -> Self {
        Self {
            variant: PeVariant::AreaOptimized,
            key_bits: 32,
            value_bits: 32,
            cam_mode: false,
            include_value_readout_ticks: true,
        }
    }

    pub fn perf_optimized() -> Self {
        Self {
            variant: PeVariant::PerfOptimized,
            ..Self::area_optimized()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for bits in [self.key_bits, self.value_bits] {
            if ![8, 16, 32, 64].contains(&bits) {
                return Err(Error::Config(format!(
                    "PE word width {bits} is not one of 8, 16, 32, 64"
                )));
            }
        }
        if self.cam_mode && self.variant != PeVariant::PerfOptimized {
            return Err(Error::Config(
                "cam_mode requires the performance-optimized PE".into(),
            ));
        }
        Ok(())
    }

    /// Whether `key`/`value` can be stored under this PE's word widths.
    pub fn check_pair(&self, key: u32, value: u32) -> Result<()> {
        for (v, bits) in [(key, self.key_bits), (value, self.value_bits)] {
            if bits < 32 && v >> bits != 0 {
                return Err(Error::TooWide {
                    value: v as u64,
                    bits,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        PeConfig::area_optimized().validate().unwrap();
        PeConfig::perf_optimized().validate().unwrap();
        let bad = PeConfig {
            key_bits: 12,
            ..PeConfig::perf_optimized()
        };
        assert!(bad.validate().is_err());
        let bad = PeConfig {
            cam_mode: true,
            ..PeConfig::area_optimized()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn narrow_widths_bound_pairs() {
        let cfg = PeConfig {
            key_bits: 8,
            value_bits: 16,
            ..PeConfig::perf_optimized()
        };
        cfg.check_pair(255, 65535).unwrap();
        assert!(cfg.check_pair(256, 0).is_err());
        assert!(cfg.check_pair(0, 65536).is_err());
    }
}
