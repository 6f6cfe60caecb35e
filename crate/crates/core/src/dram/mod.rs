//! DRAM geometry, row-buffer state, command timing and trace checking.

mod config;
mod geometry;
mod protocol;
mod timing;
mod trace;

pub use config::{SimConfig, DEFAULT_CPU_SCAN_NS_PER_LINE};
pub use geometry::{map_page_to_row, row_to_page, DramGeometry, RowAddress};
pub use protocol::{check_protocol, Rule, Violation};
pub use timing::{activate, Activation, DramTiming, SubarrayState};
pub(crate) use timing::activate_kind;
pub use trace::{parse_trace_csv, write_trace_csv, EventKind, TraceEvent, TRACE_HEADER};

/// Whether rows are closed after every probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PagePolicy {
    #[default]
    Closed,
    Open,
}
