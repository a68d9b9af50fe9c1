#![no_main]

use std::path::Path;

use fcf_core::ingest::IngestManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(m) = IngestManifest::parse(s, Path::new("/base")) {
        assert!(m.entries.iter().all(|e| e.path.is_absolute()));
    }
});
