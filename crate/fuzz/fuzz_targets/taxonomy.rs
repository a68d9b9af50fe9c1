#![no_main]

use fcf_core::EventTaxonomy;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(t) = EventTaxonomy::parse(s) {
        for leaf in t.leaves() {
            assert!(t.contains(leaf));
            assert!(t.is_within(leaf, leaf));
        }
    }
});
