#![no_main]

use fcf_core::ingest::parse_record_line;
use fcf_core::SubDataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(doc) = parse_record_line(data, SubDataset::FN) {
        assert!(!doc.id.is_empty());
        assert_eq!(doc.source, SubDataset::FN);
    }
});
