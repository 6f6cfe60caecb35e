use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::bitslice::BitSlicedRegion;
use super::row::{check_key, RowImage, Slot};
use super::PeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub found: bool,
    /// Only meaningful when `found`.
    pub value: u32,
    pub column_index: Option<usize>,
    pub pe_ticks: u64,
}

impl MatchResult {
    fn miss(pe_ticks: u64) -> Self {
        Self {
            found: false,
            value: 0,
            column_index: None,
            pe_ticks,
        }
    }

    pub fn value(&self) -> Option<u32> {
        self.found.then_some(self.value)
    }
}

fn check_range(range: &Range<usize>, capacity: usize) -> Result<()> {
    if range.start > range.end || range.end > capacity {
        return Err(Error::Range {
            what: "slot range end",
            index: range.end.max(range.start) as u64,
            limit: capacity as u64,
        });
    }
    Ok(())
}

/// Element-serial, bit-parallel scan: one slot per PE tick.
///
/// Stops at the first match or the first `Empty` slot; tombstones cost a tick
/// but never match.
pub fn area_scan(row: &RowImage, key: u32, range: Range<usize>) -> Result<MatchResult> {
    check_key(key)?;
    check_range(&range, row.capacity())?;
    let mut ticks = 0;
    for col in range {
        ticks += 1;
        match row.slot(col) {
            Slot::Empty => break,
            Slot::Occupied { key: k, value } if k == key => {
                return Ok(MatchResult {
                    found: true,
                    value,
                    column_index: Some(col),
                    pe_ticks: ticks,
                })
            }
            _ => {}
        }
    }
    Ok(MatchResult::miss(ticks))
}

/// Element-parallel scan over the bit planes.
///
/// Per-column match flags start as occupancy (restricted to `range`) and are
/// ANDed against one key bit per tick. In CAM mode the whole comparison takes
/// one tick. Value readout adds `value_bits` ticks (one in CAM mode) when
/// enabled.
pub fn perf_scan(
    region: &BitSlicedRegion,
    key: u32,
    range: Range<usize>,
    config: &PeConfig,
) -> Result<MatchResult> {
    check_key(key)?;
    check_range(&range, region.columns())?;
    let key_bits = region.key_bits();
    let readout = config.include_value_readout_ticks;
    let ticks = if config.cam_mode {
        1 + readout as u64
    } else {
        key_bits as u64 + if readout { region.value_bits() as u64 } else { 0 }
    };

    if key_bits < 32 && key >> key_bits != 0 {
        // no stored key can have bits above the plane width
        return Ok(MatchResult::miss(ticks));
    }

    let occupancy = region.occupancy().words();
    let first_word = range.start / 64;
    let end_word = range.end.div_ceil(64);
    for w in first_word..end_word {
        let mut flags = occupancy[w] & window_mask(w, &range);
        for bit in 0..key_bits as usize {
            if flags == 0 {
                break;
            }
            let plane = region.key_plane(bit).words()[w];
            flags &= if bit < 32 && key >> bit & 1 == 1 { plane } else { !plane };
        }
        if flags != 0 {
            let col = w * 64 + flags.trailing_zeros() as usize;
            return Ok(MatchResult {
                found: true,
                value: region.value_at(col),
                column_index: Some(col),
                pe_ticks: ticks,
            });
        }
    }
    Ok(MatchResult::miss(ticks))
}

fn window_mask(word: usize, range: &Range<usize>) -> u64 {
    let lo = word * 64;
    let from = range.start.saturating_sub(lo).min(64);
    let to = (range.end - lo.min(range.end)).min(64);
    if from >= to {
        return 0;
    }
    let upper = if to == 64 { u64::MAX } else { (1u64 << to) - 1 };
    upper & !((1u64 << from) - 1)
}
