#![no_main]

use fcf_core::pack::{decode_window_file, write_window_file};
use libfuzzer_sys::fuzz_target;

// anything that decodes re-encodes to the same bytes
fuzz_target!(|data: &[u8]| {
    if let Ok(file) = decode_window_file(data) {
        let mut out = Vec::new();
        write_window_file(&mut out, &file.header, file.windows.iter().map(|w| w.tokens.as_slice())).unwrap();
        assert_eq!(out, data);
    }
});
