//! Row-buffer protocol checker for event traces.
//!
//! Per subarray, in timestamp order:
//! - `PE`/`READ` need the addressed row open for at least tRCD.
//! - `ACT` needs the subarray precharged, and at least tRP since the last `PRE`.
//! - `PRE` may not come earlier than tRAS after the `ACT` it closes.

use std::collections::HashMap;

use super::{DramTiming, EventKind, TraceEvent};

/// Slack for accumulated floating-point error in timestamps.
const EPSILON_NS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    AccessBeforeTrcd,
    AccessToClosedRow,
    ActWhileOpen,
    ActBeforeTrp,
    PreBeforeTras,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Position of the offending event in the input slice.
    pub index: usize,
    pub event: TraceEvent,
    pub rule: Rule,
}

#[derive(Default)]
struct Bank {
    open_row: Option<u32>,
    act_at: f64,
    pre_at: Option<f64>,
}

pub fn check_protocol(events: &[TraceEvent], timing: &DramTiming) -> Vec<Violation> {
    let mut order: Vec<usize> = (0..events.len()).collect();
    // stable: equal timestamps keep emission order
    order.sort_by(|&a, &b| events[a].timestamp_ns.total_cmp(&events[b].timestamp_ns));

    let mut states: HashMap<(u32, u32, u32, u32), Bank> = HashMap::new();
    let mut violations = Vec::new();
    for index in order {
        let event = events[index];
        let a = event.addr;
        let state = states
            .entry((a.channel, a.rank, a.bank, a.subarray))
            .or_default();
        let t = event.timestamp_ns;
        let mut flag = |rule| {
            violations.push(Violation { index, event, rule });
        };
        match event.kind {
            EventKind::Act => {
                if state.open_row.is_some() {
                    flag(Rule::ActWhileOpen);
                }
                if let Some(pre) = state.pre_at {
                    if t + EPSILON_NS < pre + timing.trp_ns() {
                        flag(Rule::ActBeforeTrp);
                    }
                }
                state.open_row = Some(a.row);
                state.act_at = t;
            }
            EventKind::Pe | EventKind::Read => {
                if state.open_row != Some(a.row) {
                    flag(Rule::AccessToClosedRow);
                } else if t + EPSILON_NS < state.act_at + timing.trcd_ns() {
                    flag(Rule::AccessBeforeTrcd);
                }
            }
            EventKind::Pre => {
                if state.open_row.is_some() && t + EPSILON_NS < state.act_at + timing.tras_ns() {
                    flag(Rule::PreBeforeTras);
                }
                state.open_row = None;
                state.pre_at = Some(t);
            }
        }
    }
    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dram::RowAddress;

    fn at(t: f64, kind: EventKind, row: u32) -> TraceEvent {
        TraceEvent::new(
            t,
            kind,
            RowAddress {
                channel: 0,
                rank: 0,
                bank: 0,
                subarray: 0,
                row,
            },
        )
    }

    fn rules(events: &[TraceEvent]) -> Vec<Rule> {
        check_protocol(events, &DramTiming::default())
            .into_iter()
            .map(|v| v.rule)
            .collect()
    }

    #[test]
    fn legal_closed_page_probe() {
        let trace = [
            at(0.0, EventKind::Act, 4),
            at(13.75, EventKind::Pe, 4),
            at(16.25, EventKind::Read, 4),
            at(32.5, EventKind::Pre, 4),
            at(46.25, EventKind::Act, 7),
        ];
        assert!(rules(&trace).is_empty());
    }

    #[test]
    fn detects_each_rule() {
        assert_eq!(
            rules(&[at(0.0, EventKind::Act, 1), at(10.0, EventKind::Read, 1)]),
            [Rule::AccessBeforeTrcd]
        );
        assert_eq!(rules(&[at(0.0, EventKind::Pe, 1)]), [Rule::AccessToClosedRow]);
        assert_eq!(
            rules(&[at(0.0, EventKind::Act, 1), at(40.0, EventKind::Act, 2)]),
            [Rule::ActWhileOpen]
        );
        assert_eq!(
            rules(&[at(0.0, EventKind::Act, 1), at(20.0, EventKind::Pre, 1)]),
            [Rule::PreBeforeTras]
        );
        assert_eq!(
            rules(&[
                at(0.0, EventKind::Act, 1),
                at(40.0, EventKind::Pre, 1),
                at(45.0, EventKind::Act, 2),
            ]),
            [Rule::ActBeforeTrp]
        );
    }

    #[test]
    fn subarrays_are_independent_and_order_is_by_time() {
        let mut other = at(5.0, EventKind::Act, 3);
        other.addr.subarray = 1;
        let trace = [
            at(13.75, EventKind::Read, 1),
            other,
            at(0.0, EventKind::Act, 1),
        ];
        assert!(rules(&trace).is_empty());
    }
}
