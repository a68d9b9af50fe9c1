//! Near-duplicate removal with character shingles, MinHash and LSH banding.
//!
//! Each document is reduced to the set of hashes of its `k`-scalar windows,
//! sketched into `H` MinHash minima, and indexed in `b` bands of `r` rows.
//! Documents sharing a band bucket are candidates; a candidate is a duplicate
//! when its estimated Jaccard similarity reaches the threshold. Documents are
//! processed in stream order and the first-seen member of a cluster is kept.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::{CleanDocument, SubDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DedupParams {
    /// Shingle width in scalars.
    pub k: usize,
    /// Signature length `H`.
    pub num_hashes: usize,
    pub bands: usize,
    pub rows_per_band: usize,
    pub threshold: f64,
    pub seed: u64,
    /// Deduplicate across sources instead of within each source.
    pub cross_source: bool,
}

impl Default for DedupParams {
    fn default() -> Self {
        DedupParams {
            k: 5,
            num_hashes: 128,
            bands: 32,
            rows_per_band: 4,
            threshold: 0.8,
            seed: 0,
            cross_source: false,
        }
    }
}

impl DedupParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.k == 0 {
            return Err(ConfigError::invalid("dedup.k", "must be at least 1"));
        }
        if self.num_hashes == 0 {
            return Err(ConfigError::invalid("dedup.num_hashes", "must be at least 1"));
        }
        if self.bands * self.rows_per_band != self.num_hashes {
            return Err(ConfigError::invalid(
                "dedup.bands",
                format!(
                    "bands ({}) x rows_per_band ({}) must equal num_hashes ({})",
                    self.bands, self.rows_per_band, self.num_hashes
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ConfigError::invalid("dedup.threshold", "must be in [0,1]"));
        }
        Ok(())
    }

    /// Probability that a pair with Jaccard similarity `s` shares at least
    /// one band bucket: `1 - (1 - s^r)^b`.
    pub fn candidate_probability(&self, s: f64) -> f64 {
        1.0 - (1.0 - s.powi(self.rows_per_band as i32)).powi(self.bands as i32)
    }
}

/// 64-bit FNV-1a followed by a murmur3 finalizer.
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    fmix64(h)
}

#[inline]
fn fmix64(mut h: u64) -> u64 {
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    h = h.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    h ^= h >> 33;
    h
}

/// Hashes of every contiguous `k`-scalar window of `text`, in text order
/// (repeats included).
pub fn shingle_hashes(text: &str, k: usize) -> impl Iterator<Item = u64> + '_ {
    assert!(k >= 1, "shingle width must be positive");
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let n = bounds.len() - 1;
    let count = if n >= k { n - k + 1 } else { 0 };
    (0..count).map(move |i| hash_bytes(&text.as_bytes()[bounds[i]..bounds[i + k]]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShingleSet {
    pub doc_id: String,
    /// Sorted, distinct.
    pub shingles: Vec<u64>,
}

impl ShingleSet {
    pub fn len(&self) -> usize {
        self.shingles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shingles.is_empty()
    }
}

pub fn shingles(doc_id: &str, text: &str, k: usize) -> ShingleSet {
    let mut s: Vec<u64> = shingle_hashes(text, k).collect();
    s.sort_unstable();
    s.dedup();
    ShingleSet {
        doc_id: doc_id.to_string(),
        shingles: s,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHashSignature {
    pub doc_id: String,
    pub values: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("signature lengths differ ({0} vs {1})")]
pub struct SignatureMismatch(pub usize, pub usize);

/// Fraction of signature positions that agree.
pub fn jaccard_estimate(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64, SignatureMismatch> {
    if a.values.len() != b.values.len() || a.values.is_empty() {
        return Err(SignatureMismatch(a.values.len(), b.values.len()));
    }
    Ok(agreement(&a.values, &b.values))
}

fn agreement(a: &[u64], b: &[u64]) -> f64 {
    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
    same as f64 / a.len() as f64
}

/// Seeded family of `H` hash functions `h_i(x) = (x ^ a_i) * m_i` with odd
/// multipliers.
#[derive(Debug, Clone)]
pub struct MinHasher {
    xors: Vec<u64>,
    muls: Vec<u64>,
    k: usize,
}

impl MinHasher {
    pub fn new(num_hashes: usize, k: usize, seed: u64) -> MinHasher {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xors = (0..num_hashes).map(|_| rng.gen()).collect();
        let muls = (0..num_hashes).map(|_| rng.gen::<u64>() | 1).collect();
        MinHasher { xors, muls, k }
    }

    pub fn from_params(p: &DedupParams) -> MinHasher {
        MinHasher::new(p.num_hashes, p.k, p.seed)
    }

    pub fn num_hashes(&self) -> usize {
        self.xors.len()
    }

    /// Minima over a set of already-hashed elements.
    pub fn sketch(&self, elements: impl IntoIterator<Item = u64>) -> Vec<u64> {
        let mut mins = vec![u64::MAX; self.xors.len()];
        for x in elements {
            for ((m, &a), &b) in mins.iter_mut().zip(&self.xors).zip(&self.muls) {
                let h = (x ^ a).wrapping_mul(b);
                if h < *m {
                    *m = h;
                }
            }
        }
        mins
    }

    pub fn signature_of_set(&self, set: &ShingleSet) -> MinHashSignature {
        MinHashSignature {
            doc_id: set.doc_id.clone(),
            values: self.sketch(set.shingles.iter().copied()),
        }
    }

    /// Signature of a document's text. Text shorter than `k` scalars has no
    /// shingles, so the whole text stands in as a single element; equal short
    /// texts therefore still collide.
    pub fn signature(&self, doc_id: &str, text: &str) -> MinHashSignature {
        let values = if text.chars().nth(self.k - 1).is_some() {
            self.sketch(shingle_hashes(text, self.k))
        } else {
            self.sketch(std::iter::once(hash_bytes(text.as_bytes()) ^ 0x5348_4f52_5421_u64))
        };
        MinHashSignature {
            doc_id: doc_id.to_string(),
            values,
        }
    }
}

/// Banded index over signatures, keyed by document index.
#[derive(Debug, Clone)]
pub struct LshIndex {
    bands: usize,
    rows: usize,
    buckets: Vec<HashMap<u64, Vec<u32>>>,
}

impl LshIndex {
    pub fn new(bands: usize, rows: usize) -> LshIndex {
        LshIndex {
            bands,
            rows,
            buckets: (0..bands).map(|_| HashMap::new()).collect(),
        }
    }

    pub fn from_params(p: &DedupParams) -> LshIndex {
        LshIndex::new(p.bands, p.rows_per_band)
    }

    pub fn band_keys(&self, values: &[u64]) -> Vec<u64> {
        band_keys(values, self.bands, self.rows)
    }

    pub fn insert(&mut self, idx: u32, keys: &[u64]) {
        for (band, key) in self.buckets.iter_mut().zip(keys) {
            band.entry(*key).or_default().push(idx);
        }
    }

    /// Indices sharing at least one bucket, ascending and distinct.
    pub fn candidates(&self, keys: &[u64]) -> Vec<u32> {
        let mut out: Vec<u32> = self
            .buckets
            .iter()
            .zip(keys)
            .filter_map(|(band, key)| band.get(key))
            .flatten()
            .copied()
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

pub fn band_keys(values: &[u64], bands: usize, rows: usize) -> Vec<u64> {
    (0..bands)
        .map(|b| {
            let mut h = (b as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            for &v in &values[b * rows..(b + 1) * rows] {
                h = fmix64(h ^ v).wrapping_add(0x632b_e59b_d9b4_e019);
            }
            h
        })
        .collect()
}

/// A kept document and the near-duplicates dropped in its favour.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub kept: String,
    pub dropped: Vec<String>,
}

#[derive(Debug, Default)]
pub struct DedupOutput {
    pub kept: Vec<CleanDocument>,
    /// Clusters with at least one dropped member, ordered by the kept
    /// document's stream position.
    pub clusters: Vec<Cluster>,
    pub dropped: usize,
}

/// Per-document signature data, computed in parallel.
struct Sketch {
    values: Vec<u64>,
    keys: Vec<u64>,
}

fn sketch_all(docs: &[CleanDocument], params: &DedupParams) -> Vec<Sketch> {
    let hasher = MinHasher::from_params(params);
    docs.par_iter()
        .map(|d| {
            let values = hasher.signature(&d.id, &d.clean_text).values;
            let keys = band_keys(&values, params.bands, params.rows_per_band);
            Sketch { values, keys }
        })
        .collect()
}

/// Removes near-duplicates, keeping the first-seen document of each cluster.
///
/// Each document is compared with the kept documents that precede it in
/// stream order; among those that pass the threshold the earliest wins.
/// Grouping is per source unless `params.cross_source` is set.
pub fn dedup_corpus(docs: Vec<CleanDocument>, params: &DedupParams) -> Result<DedupOutput, ConfigError> {
    params.validate()?;
    let sketches = sketch_all(&docs, params);
    let mut indexes: BTreeMap<Option<SubDataset>, LshIndex> = BTreeMap::new();
    // cluster slot per kept document
    let mut assigned: Vec<Option<u32>> = vec![None; docs.len()];
    for (i, (doc, sk)) in docs.iter().zip(&sketches).enumerate() {
        let group = (!params.cross_source).then_some(doc.source);
        let index = indexes.entry(group).or_insert_with(|| LshIndex::from_params(params));
        let rep = index
            .candidates(&sk.keys)
            .into_iter()
            .find(|&j| agreement(&sk.values, &sketches[j as usize].values) >= params.threshold);
        match rep {
            Some(j) => assigned[i] = Some(j),
            None => index.insert(i as u32, &sk.keys),
        }
    }
    let mut dropped_by: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for (i, rep) in assigned.iter().enumerate() {
        if let Some(j) = rep {
            dropped_by.entry(*j).or_default().push(docs[i].id.clone());
        }
    }
    let clusters = dropped_by
        .into_iter()
        .map(|(j, dropped)| Cluster {
            kept: docs[j as usize].id.clone(),
            dropped,
        })
        .collect();
    let dropped = assigned.iter().filter(|a| a.is_some()).count();
    let kept = docs
        .into_iter()
        .zip(assigned)
        .filter_map(|(d, a)| a.is_none().then_some(d))
        .collect();
    Ok(DedupOutput {
        kept,
        clusters,
        dropped,
    })
}

/// Every pair `(i, j)`, `i < j`, that LSH proposes and whose estimate reaches
/// the threshold. All documents are indexed regardless of grouping.
pub fn duplicate_pairs(texts: &[&str], params: &DedupParams) -> Result<Vec<(usize, usize)>, ConfigError> {
    params.validate()?;
    let hasher = MinHasher::from_params(params);
    let sigs: Vec<Vec<u64>> = texts.par_iter().map(|t| hasher.signature("", t).values).collect();
    let mut index = LshIndex::from_params(params);
    let mut pairs = Vec::new();
    for (j, sig) in sigs.iter().enumerate() {
        let keys = index.band_keys(sig);
        for i in index.candidates(&keys) {
            if agreement(&sigs[i as usize], sig) >= params.threshold {
                pairs.push((i as usize, j));
            }
        }
        index.insert(j as u32, &keys);
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, text: &str) -> CleanDocument {
        CleanDocument {
            id: id.into(),
            source: SubDataset::FN,
            timestamp: None,
            text: text.into(),
            metadata: Default::default(),
            clean_text: text.into(),
            char_count: text.chars().count(),
            garbled_ratio: 0.0,
        }
    }

    #[test]
    fn shingle_counts() {
        assert_eq!(shingles("a", "abcde", 5).len(), 1);
        let s = shingles("a", "abcdef", 5);
        let mut expect = vec![hash_bytes(b"abcde"), hash_bytes(b"bcdef")];
        expect.sort_unstable();
        assert_eq!(s.shingles, expect);
        assert!(shingles("a", "abcd", 5).is_empty());
        assert_eq!(shingles("x", "股市上涨了", 5).len(), 1);
    }

    #[test]
    fn shingles_ignore_doc_id() {
        assert_eq!(
            shingles("a", "同样的文本内容", 3).shingles,
            shingles("b", "同样的文本内容", 3).shingles
        );
    }

    #[test]
    fn identical_estimate_is_one() {
        let h = MinHasher::new(128, 5, 1);
        let a = h.signature("a", "公司发布年度报告显示利润增长");
        let b = h.signature("b", "公司发布年度报告显示利润增长");
        assert_eq!(jaccard_estimate(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let a = MinHasher::new(128, 5, 1).signature("a", "abcdefg");
        let b = MinHasher::new(64, 5, 1).signature("b", "abcdefg");
        assert_eq!(jaccard_estimate(&a, &b), Err(SignatureMismatch(128, 64)));
    }

    #[test]
    fn params_validated() {
        let mut p = DedupParams::default();
        assert!(p.validate().is_ok());
        p.bands = 30;
        assert!(p.validate().is_err());
        let p = DedupParams {
            k: 0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn exact_duplicate_pair() {
        let text = "央行宣布下调存款准备金率0.25个百分点，释放长期资金约5000亿元。";
        let out = dedup_corpus(vec![doc("n1", text), doc("n2", text)], &DedupParams::default()).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].id, "n1");
        assert_eq!(
            out.clusters,
            vec![Cluster {
                kept: "n1".into(),
                dropped: vec!["n2".into()]
            }]
        );
    }

    #[test]
    fn per_source_grouping() {
        let text = "同一篇新闻在两个来源中出现，内容完全一致。";
        let mut b = doc("s1", text);
        b.source = SubDataset::SM;
        let docs = vec![doc("f1", text), b];
        let out = dedup_corpus(docs.clone(), &DedupParams::default()).unwrap();
        assert_eq!(out.kept.len(), 2);
        let p = DedupParams {
            cross_source: true,
            ..Default::default()
        };
        assert_eq!(dedup_corpus(docs, &p).unwrap().kept.len(), 1);
    }

    #[test]
    fn short_texts_still_match() {
        let out = dedup_corpus(
            vec![doc("a", "涨"), doc("b", "涨"), doc("c", "跌")],
            &DedupParams::default(),
        )
        .unwrap();
        assert_eq!(out.kept.len(), 2);
    }

    #[test]
    fn s_curve_formula() {
        let p = DedupParams::default();
        assert!((p.candidate_probability(0.5) - 0.8733).abs() < 1e-3);
        assert!(p.candidate_probability(0.95) > 0.999_999);
    }
}
