#![no_main]

use libfuzzer_sys::fuzz_target;
use opnorm::config::RunConfig;

fuzz_target!(|data: &str| {
    // a config that loads must also survive validation without panicking
    if let Ok(cfg) = RunConfig::from_toml(data) {
        let _ = cfg.validate();
    }
});
