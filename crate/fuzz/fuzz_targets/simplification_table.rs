#![no_main]

use fcf_core::clean::parse_simplification_table;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_simplification_table(s);
    }
});
