#![no_main]

use hashmem::workload::{parse_reports, reports_to_csv, reports_to_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(reports) = parse_reports(text) {
        assert_eq!(parse_reports(&reports_to_csv(&reports).unwrap()).unwrap(), reports);
        assert_eq!(parse_reports(&reports_to_json(&reports).unwrap()).unwrap(), reports);
    }
});
