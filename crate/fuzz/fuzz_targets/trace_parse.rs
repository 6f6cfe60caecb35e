#![no_main]

use hashmem::dram::{check_protocol, parse_trace_csv, DramTiming};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(events) = parse_trace_csv(text) {
        let _ = check_protocol(&events, &DramTiming::default());
    }
});
