#![no_main]

use std::path::Path;

use fcf_cli::config::RunConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::parse(s, Path::new("/base")) {
        // a valid config always has a stable digest
        assert_eq!(cfg.digest(), cfg.digest());
    }
});
