#![no_main]

use fcf_core::clean::{apply_policy, BannedWords};
use fcf_core::{RawDocument, SourcePolicy, SubDataset};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let dict = BannedWords::parse("代开发票\n网络赌博\n");
    for source in SubDataset::PRETRAINING {
        let policy = SourcePolicy::default_for(source);
        let doc = RawDocument {
            id: "f".into(),
            source,
            timestamp: None,
            text: text.to_string(),
            metadata: Default::default(),
        };
        if let Some(kept) = apply_policy(doc, &policy, &dict).kept() {
            assert_eq!(kept.char_count, kept.clean_text.chars().count());
            assert!(kept.char_count >= policy.min_chars);
            assert!(!kept.clean_text.contains('\u{FFFD}'));
        }
    }
});
