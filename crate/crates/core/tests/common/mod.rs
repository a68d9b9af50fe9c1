#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use fcf_core::{CleanDocument, RawDocument, SubDataset};
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn raw(id: &str, source: SubDataset, text: &str) -> RawDocument {
    RawDocument {
        id: id.into(),
        source,
        timestamp: None,
        text: text.into(),
        metadata: Default::default(),
    }
}

pub fn clean(id: &str, source: SubDataset, text: &str) -> CleanDocument {
    CleanDocument {
        id: id.into(),
        source,
        timestamp: None,
        text: text.into(),
        metadata: Default::default(),
        clean_text: text.into(),
        char_count: text.chars().count(),
        garbled_ratio: 0.0,
    }
}

/// Random CJK text over the full unified block.
pub fn cjk_text<R: Rng>(rng: &mut R, n: usize) -> String {
    (0..n)
        .map(|_| char::from_u32(rng.gen_range(0x4E00..=0x9FFF)).unwrap())
        .collect()
}

/// Exact Jaccard similarity of the `k`-scalar substring sets.
pub fn exact_jaccard(a: &str, b: &str, k: usize) -> f64 {
    let grams = |s: &str| -> BTreeSet<String> {
        let cs: Vec<char> = s.chars().collect();
        if cs.len() < k {
            return BTreeSet::new();
        }
        cs.windows(k).map(|w| w.iter().collect()).collect()
    };
    let (x, y) = (grams(a), grams(b));
    let union = x.union(&y).count();
    if union == 0 {
        return 1.0;
    }
    x.intersection(&y).count() as f64 / union as f64
}

pub fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}
