#![no_main]

use fcf_core::model::load_policies;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(table) = s.parse::<toml::Table>() {
        let _ = load_policies(&table);
    }
});
