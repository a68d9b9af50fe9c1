#![no_main]

use fcf_core::clean::BannedWords;
use libfuzzer_sys::fuzz_target;

// every dictionary term is found in a text made of it
fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let dict = BannedWords::parse(s);
    for t in dict.terms() {
        let (hit, matched) = dict.contains_banned(&format!("前{t}后"));
        assert!(hit);
        assert!(matched.contains(t));
    }
});
