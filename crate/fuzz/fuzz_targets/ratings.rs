#![no_main]

use fcf_core::sft::RatingMap;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = RatingMap::parse(s);
    }
});
