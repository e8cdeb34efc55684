#![no_main]

use libfuzzer_sys::fuzz_target;
use opnorm::opspace::NormKind;

fuzz_target!(|data: &str| {
    let _ = data.parse::<NormKind>();
});
