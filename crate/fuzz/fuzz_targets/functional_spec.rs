#![no_main]

use std::collections::BTreeMap;

use libfuzzer_sys::fuzz_target;
use opnorm::config::parse_functional;

fuzz_target!(|data: &str| {
    let _ = parse_functional(data, &BTreeMap::new());
});
