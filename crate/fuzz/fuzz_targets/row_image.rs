#![no_main]

use hashmem::pe::{bitslice_decode, bitslice_encode, decode_row, RowImage};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|bytes: &[u8]| {
    let Ok(row) = RowImage::from_bytes(bytes) else { return };
    assert_eq!(row.to_bytes(), bytes);
    assert!(decode_row(&row).len() <= row.capacity());
    let region = bitslice_encode(&row, 32, 32).expect("full-width slicing");
    assert_eq!(bitslice_decode(&region), row);
});
