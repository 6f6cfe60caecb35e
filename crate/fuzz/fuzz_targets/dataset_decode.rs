#![no_main]

use hashmem::workload::{decode_dataset, encode_dataset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|bytes: &[u8]| {
    if let Ok(pairs) = decode_dataset(bytes) {
        assert_eq!(encode_dataset(&pairs), bytes);
    }
});
