mod common;

use std::collections::BTreeMap;

use common::*;
use fcf_core::clean::{garbled_ratio, to_simplified, BannedWords};
use fcf_core::dedup::{dedup_corpus, jaccard_estimate, DedupParams, MinHasher, ShingleSet};
use fcf_core::html::extract_text_from_html;
use fcf_core::pack::build_token_stream;
use fcf_core::sft::{build_rs, build_sp, label_movement, SpLabelStyle, SpRecord};
use fcf_core::tokenizer::{ByteTokenizer, TokenId, TokenizeError, Tokenizer};
use fcf_core::{EventTaxonomy, SubDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn garbled_ratio_matches_per_scalar_count() {
    // pools with known classification
    let clean_pools: &[(u32, u32)] = &[
        (0x4E00, 0x9FFF),
        (0x41, 0x5A),
        (0x30, 0x39),
        (0x3001, 0x3002),
        (0xFF01, 0xFF5E),
    ];
    let garbled_pools: &[(u32, u32)] = &[
        (0xE000, 0xF8FF),
        (0x410, 0x44F),
        (0x1F600, 0x1F64F),
        (0x1, 0x8),
        (0xFFFD, 0xFFFD),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let mut text = String::new();
        let mut expected = 0usize;
        for _ in 0..1000 {
            let garbled = rng.gen_bool(0.3);
            let pools = if garbled { garbled_pools } else { clean_pools };
            let (lo, hi) = pools[rng.gen_range(0..pools.len())];
            text.push(char::from_u32(rng.gen_range(lo..=hi)).unwrap());
            expected += garbled as usize;
        }
        assert_eq!(garbled_ratio(&text), expected as f64 / 1000.0);
    }
}

#[test]
fn simplification_spot_checks() {
    for (trad, simp) in [
        ("臺灣經濟", "台湾经济"),
        ("證券市場", "证券市场"),
        ("銀行業務", "银行业务"),
        ("國際貿易", "国际贸易"),
        ("漲跌幅", "涨跌幅"),
        ("報告", "报告"),
        ("龍馬鳥門車", "龙马鸟门车"),
        ("已是简体", "已是简体"),
        ("ABC123", "ABC123"),
    ] {
        assert_eq!(to_simplified(trad), simp);
        assert_eq!(to_simplified(trad).chars().count(), trad.chars().count());
    }
}

#[test]
fn banned_terms_match_independent_scan() {
    let dict = BannedWords::load(&data_file("banned_words.txt")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let mut text = cjk_text(&mut rng, 40);
        for _ in 0..rng.gen_range(0..3) {
            let t = &dict.terms()[rng.gen_range(0..dict.terms().len())];
            let at = text.char_indices().nth(rng.gen_range(0..40)).unwrap().0;
            text.insert_str(at, t);
        }
        let mut scan: Vec<String> = dict
            .terms()
            .iter()
            .filter(|t| text.contains(t.as_str()))
            .cloned()
            .collect();
        scan.sort();
        let (hit, matched) = dict.contains_banned(&text);
        assert_eq!(hit, !scan.is_empty());
        assert_eq!(matched, scan);
    }
}

#[test]
fn html_fixture_matches_reference() {
    let dir = fixture("html");
    let mut n = 0;
    for i in 0..50 {
        let html = std::fs::read_to_string(dir.join(format!("{i:02}.html"))).unwrap();
        let want = std::fs::read_to_string(dir.join(format!("{i:02}.txt"))).unwrap();
        let got = extract_text_from_html(&html);
        assert_eq!(got, want, "document {i:02}");
        assert_eq!(extract_text_from_html(&got), got, "idempotence on {i:02}");
        n += 1;
    }
    assert_eq!(n, 50);
}

#[test]
fn taxonomy_fixture_shape() {
    let t = EventTaxonomy::parse(&std::fs::read_to_string(data_file("event_taxonomy.txt")).unwrap()).unwrap();
    assert_eq!(t.leaf_count(), 98);
    assert_eq!(t.depth(), 7);
    assert!(t.is_within("控股股东增持计划", "资本运作"));
}

fn set_of(ids: impl IntoIterator<Item = u64>) -> ShingleSet {
    let mut shingles: Vec<u64> = ids.into_iter().map(|x| x.wrapping_mul(0x9E37_79B9_7F4A_7C15)).collect();
    shingles.sort_unstable();
    shingles.dedup();
    ShingleSet {
        doc_id: String::new(),
        shingles,
    }
}

#[test]
fn disjoint_sets_estimate_near_zero() {
    for seed in 0..20 {
        let h = MinHasher::new(128, 5, seed);
        let a = h.signature_of_set(&set_of(0..1000));
        let b = h.signature_of_set(&set_of(1000..2000));
        assert!(jaccard_estimate(&a, &b).unwrap() < 0.1);
    }
}

#[test]
fn half_overlap_estimates_one_third() {
    // |A| = |B| = 1000 sharing 500 elements: J = 500 / 1500
    let truth = 1.0 / 3.0;
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let h = MinHasher::new(128, 5, seed);
        let a = h.signature_of_set(&set_of(0..1000));
        let b = h.signature_of_set(&set_of(500..1500));
        worst = worst.max((jaccard_estimate(&a, &b).unwrap() - truth).abs());
    }
    assert!(worst <= 0.12, "worst deviation {worst}");
}

/// 180 unrelated documents plus 20 near copies with two edits each.
fn planted_corpus(seed: u64) -> (Vec<String>, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut texts: Vec<String> = (0..180).map(|_| cjk_text(&mut rng, 400)).collect();
    let mut planted = Vec::new();
    for i in 0..20 {
        let mut cs: Vec<char> = texts[i * 9].chars().collect();
        for _ in 0..2 {
            let at = rng.gen_range(0..cs.len());
            cs[at] = char::from_u32(rng.gen_range(0x4E00..=0x9FFF)).unwrap();
        }
        planted.push((i * 9, texts.len()));
        texts.push(cs.into_iter().collect());
    }
    (texts, planted)
}

#[test]
fn planted_pairs_found() {
    let (texts, planted) = planted_corpus(11);
    for &(a, b) in &planted {
        assert!(exact_jaccard(&texts[a], &texts[b], 5) >= 0.9);
    }
    let docs: Vec<_> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| clean(&format!("d{i:03}"), SubDataset::FN, t))
        .collect();
    let out = dedup_corpus(docs, &DedupParams::default()).unwrap();
    let dropped: Vec<&str> = out
        .clusters
        .iter()
        .flat_map(|c| c.dropped.iter().map(String::as_str))
        .collect();
    let hits = planted
        .iter()
        .filter(|&&(_, b)| dropped.contains(&format!("d{b:03}").as_str()))
        .count();
    assert!(hits >= 19, "{hits}/20 planted pairs detected");
    // no false drops: everything dropped is a planted copy
    assert_eq!(out.dropped, hits);
}

#[test]
fn dissimilar_corpus_keeps_everything() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let texts: Vec<String> = (0..200).map(|_| cjk_text(&mut rng, 300)).collect();
    for i in 0..texts.len() {
        for j in i + 1..texts.len() {
            assert!(exact_jaccard(&texts[i], &texts[j], 5) < 0.2);
        }
    }
    let docs: Vec<_> = texts
        .iter()
        .enumerate()
        .map(|(i, t)| clean(&i.to_string(), SubDataset::SM, t))
        .collect();
    assert_eq!(dedup_corpus(docs, &DedupParams::default()).unwrap().dropped, 0);
}

#[test]
fn sp_labels_match_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let records: Vec<SpRecord> = (0..10_000)
        .map(|i| SpRecord {
            id: format!("sp{i}"),
            stock_id: "600000".into(),
            stock_name: Some("浦发银行".into()),
            date: "2023-06-01".into(),
            news: vec!["新闻".into()],
            posts: vec!["帖子".into()],
            closes_5d: vec![10.0, 10.1, 10.2, 10.15, 10.3],
            next_day_change_rate: rng.gen_range(-0.02..=0.02),
        })
        .collect();
    let out = build_sp(&records, SpLabelStyle::Movement);
    assert_eq!(out.pairs.len(), records.len());
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut oracle: BTreeMap<&str, usize> = BTreeMap::new();
    for (r, p) in records.iter().zip(&out.pairs) {
        let x = r.next_day_change_rate;
        let want = if x > 0.005 {
            "Ascend"
        } else if x < -0.005 {
            "Descend"
        } else {
            "Hold"
        };
        assert_eq!(p.output, want);
        assert_eq!(label_movement(x).unwrap().as_str(), want);
        *counts.entry(p.output.as_str()).or_default() += 1;
        *oracle.entry(want).or_default() += 1;
    }
    assert_eq!(counts, oracle);
}

#[test]
fn rs_pair_count_matches_field_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let reports: Vec<_> = (0..1000)
        .map(|i| {
            let mut d = clean(&format!("r{i}"), SubDataset::RR, "研报正文");
            for key in ["conclusion", "abstract"] {
                match rng.gen_range(0..3) {
                    0 => {}
                    1 => {
                        d.metadata.insert(key.into(), String::new());
                    }
                    _ => {
                        d.metadata.insert(key.into(), format!("{key} {i}"));
                    }
                }
            }
            d
        })
        .collect();
    let scan = reports
        .iter()
        .filter(|d| {
            ["conclusion", "abstract"]
                .iter()
                .all(|k| d.metadata.get(*k).is_some_and(|v| !v.is_empty()))
        })
        .count();
    let out = build_rs(&reports);
    assert_eq!(out.pairs.len(), scan);
    assert_eq!(out.pairs.len() + out.skipped.len(), 1000);
}

/// Maps each char to its scalar value and uses 0 as EOS.
struct CharTokenizer;

impl Tokenizer for CharTokenizer {
    fn name(&self) -> &str {
        "char"
    }
    fn vocab_size(&self) -> u32 {
        0x11_0000
    }
    fn eos_id(&self) -> TokenId {
        0
    }
    fn tokenize(&self, text: &str) -> Result<Vec<TokenId>, TokenizeError> {
        Ok(text.chars().map(|c| c as u32).collect())
    }
    fn detokenize(&self, ids: &[TokenId]) -> Result<String, TokenizeError> {
        ids.iter()
            .map(|&i| char::from_u32(i).ok_or(TokenizeError::UnknownId(i)))
            .collect()
    }
}

#[test]
fn stream_construction() {
    let docs = [
        clean("a", SubDataset::FN, "\u{1}\u{2}"),
        clean("b", SubDataset::FN, "\u{3}"),
    ];
    assert_eq!(build_token_stream(&docs, &CharTokenizer).tokens, [1, 2, 0, 3, 0]);
    assert!(build_token_stream(&[], &CharTokenizer).tokens.is_empty());
}

#[test]
fn eos_count_equals_documents() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let docs: Vec<_> = (0..100)
        .map(|i| {
            let n = rng.gen_range(0..200);
            clean(&i.to_string(), SubDataset::CP, &cjk_text(&mut rng, n))
        })
        .collect();
    let stream = build_token_stream(&docs, &ByteTokenizer);
    assert_eq!(stream.tokens.iter().filter(|&&t| t == ByteTokenizer::EOS).count(), 100);
    assert_eq!(stream.documents, 100);
}
