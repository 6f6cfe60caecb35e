#![no_main]

use hashmem::dram::DramGeometry;
use hashmem::map::{parse_sidecar, HashConfig, HashMemMap};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if parse_sidecar(text).is_err() {
        return;
    }
    let geometry = DramGeometry {
        channels: 1,
        ranks_per_channel: 1,
        banks_per_rank: 2,
        subarrays_per_bank: 2,
        rows_per_subarray: 4,
        row_size_bytes: 64,
    };
    if let Ok(map) = HashMemMap::import(geometry, HashConfig::new(8), &[], text) {
        map.check_invariants().expect("imported map is consistent");
    }
});
