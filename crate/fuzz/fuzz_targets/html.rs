#![no_main]

use fcf_core::html::extract_text_from_html;
use libfuzzer_sys::fuzz_target;

// extraction is idempotent on its own output
fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let once = extract_text_from_html(s);
        assert_eq!(extract_text_from_html(&once), once);
    }
});
