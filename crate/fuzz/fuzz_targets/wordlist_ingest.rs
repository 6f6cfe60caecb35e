#![no_main]

use std::collections::HashSet;

use hashmem::pe::is_sentinel;
use hashmem::workload::ingest_wordlist;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let keys = ingest_wordlist(text, 4096);
    assert!(keys.iter().all(|&k| !is_sentinel(k)));
    let distinct: HashSet<u32> = keys.iter().copied().collect();
    assert_eq!(distinct.len(), keys.len());
});
