#![no_main]

use libfuzzer_sys::fuzz_target;
use opnorm::config::parse_sample_spec;

fuzz_target!(|data: &str| {
    let _ = parse_sample_spec(data);
});
