use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::CACHE_LINE_BYTES;

use super::geometry::RowAddress;

/// DRAM command timing plus the PE clock. Cycle counts are in units of `tck_ns`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DramTiming {
    pub tck_ns: f64,
    pub trcd_cycles: u32,
    pub trp_cycles: u32,
    pub tcl_cycles: u32,
    pub tras_cycles: u32,
    pub burst_cycles_per_line: u32,
    pub pe_tick_ns: f64,
}

impl Default for DramTiming {
    /// DDR4-3200 22-22-22 speed bin with a 400 MHz PE clock.
    fn default() -> Self {
        Self {
            tck_ns: 0.625,
            trcd_cycles: 22,
            trp_cycles: 22,
            tcl_cycles: 22,
            tras_cycles: 52,
            burst_cycles_per_line: 4,
            pe_tick_ns: 2.5,
        }
    }
}

impl DramTiming {
    pub fn validate(&self) -> Result<()> {
        if !(self.tck_ns.is_finite() && self.tck_ns > 0.0) {
            return Err(Error::Config("tCK_ns must be positive".into()));
        }
        if !(self.pe_tick_ns.is_finite() && self.pe_tick_ns > 0.0) {
            return Err(Error::Config("pe_tick_ns must be positive".into()));
        }
        let cycles = [
            ("tRCD_cycles", self.trcd_cycles),
            ("tRP_cycles", self.trp_cycles),
            ("tCL_cycles", self.tcl_cycles),
            ("tRAS_cycles", self.tras_cycles),
            ("burst_cycles_per_line", self.burst_cycles_per_line),
        ];
        for (name, v) in cycles {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.tras_cycles < self.trcd_cycles {
            return Err(Error::Config("tRAS_cycles must be >= tRCD_cycles".into()));
        }
        Ok(())
    }

    pub fn cycles_ns(&self, cycles: u32) -> f64 {
        cycles as f64 * self.tck_ns
    }

    pub fn trcd_ns(&self) -> f64 {
        self.cycles_ns(self.trcd_cycles)
    }

    pub fn trp_ns(&self) -> f64 {
        self.cycles_ns(self.trp_cycles)
    }

    pub fn tras_ns(&self) -> f64 {
        self.cycles_ns(self.tras_cycles)
    }

    /// Read latency plus burst transfer for `n_bytes` over the bus.
    pub fn column_access(&self, n_bytes: u64) -> f64 {
        if n_bytes == 0 {
            return 0.0;
        }
        let lines = n_bytes.div_ceil(CACHE_LINE_BYTES as u64);
        (self.tcl_cycles as f64 + lines as f64 * self.burst_cycles_per_line as f64) * self.tck_ns
    }
}

/// Row-buffer state of one subarray.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SubarrayState {
    pub open_row: Option<u32>,
    /// Timestamp of the ACT that opened `open_row`.
    pub activated_at: f64,
}

/// Outcome of bringing a row into its subarray's row buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Hit,
    Idle,
    Conflict,
}

/// Opens `addr.row`, returning the latency in ns. A different open row is
/// precharged first.
pub fn activate(addr: &RowAddress, state: &mut SubarrayState, timing: &DramTiming) -> f64 {
    let (_, ns) = activate_kind(addr, state, timing);
    ns
}

pub(crate) fn activate_kind(
    addr: &RowAddress,
    state: &mut SubarrayState,
    timing: &DramTiming,
) -> (Activation, f64) {
    let outcome = match state.open_row {
        Some(r) if r == addr.row => (Activation::Hit, 0.0),
        Some(_) => (
            Activation::Conflict,
            timing.cycles_ns(timing.trp_cycles + timing.trcd_cycles),
        ),
        None => (Activation::Idle, timing.trcd_ns()),
    };
    state.open_row = Some(addr.row);
    outcome
}
