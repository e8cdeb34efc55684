//! CSV vector input: arbitrary bytes, with and without a fixed dimension.

#![no_main]

use libfuzzer_sys::fuzz_target;
use opnorm::config::parse_csv_vectors;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let _ = parse_csv_vectors(text, None);
    let _ = parse_csv_vectors(text, Some(2));
});
