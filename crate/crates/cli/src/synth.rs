//! Seeded synthetic corpus with known cleaning, dedup and fine-tuning
//! outcomes.
//!
//! Every document is built so its fate is decided by construction: clean
//! prose of a chosen length, optionally wrapped in table remnants, garbled
//! scalars, banned terms or traditional characters, or copied from an earlier
//! document. The expected counts are recorded alongside the files.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use fcf_core::clean::simplify_char;
use fcf_core::html::extract_text_from_html;
use fcf_core::sft::{label_movement, LabeledDocument, QaRecord, RatingMap, SpRecord, Turn};
use fcf_core::{EventTaxonomy, RawDocument, SubDataset};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const BANNED_WORDS: &str = include_str!("../../core/data/banned_words.txt");
pub const RATINGS: &str = include_str!("../../core/data/ratings.tsv");
pub const TAXONOMY: &str = include_str!("../../core/data/event_taxonomy.txt");

/// Simplified characters that occur in no banned term and map to themselves.
const VOCAB: &str = "的一是在不了有和人这中大为上个国我以要他时来用们生到作地于出就分对成会可主发年动同工也能下过子说产种面而方后多定行学法所民得经十三之进着等部度家电力里如水化高自二理起小物现实加量都两体制机当使点从业本去把性好应开它合还因由其些然前外天政四日那社义事平形相全表间样与关各重新线内数正心反你明看原又么利比或但质气第向道命此变条只没结解问意建月公无系军很情者最立代想已通并提直题党程展五果料象员革位入常文总次品式活设及管特件长求老头基资边流路级少图山统接知较将组见计别她手角期根论运农指几九区强放决西被干做必战先回则任取据处理世车";

const TRAD_SIMP: &[(char, char)] = &[
    ('臺', '台'),
    ('灣', '湾'),
    ('經', '经'),
    ('濟', '济'),
    ('國', '国'),
    ('際', '际'),
    ('貿', '贸'),
    ('銀', '银'),
    ('證', '证'),
    ('漲', '涨'),
    ('報', '报'),
    ('營', '营'),
    ('業', '业'),
    ('資', '资'),
    ('產', '产'),
    ('負', '负'),
    ('債', '债'),
    ('華', '华'),
];

const RATINGS_USED: [&str; 5] = ["买入", "增持", "中性", "减持", "无评级"];

/// Prose characters: unchanged by simplification and absent from every
/// banned term, so no document is dropped or altered by accident.
fn vocab() -> Vec<char> {
    let mut v: Vec<char> = VOCAB
        .chars()
        .filter(|&c| !BANNED_WORDS.contains(c) && simplify_char(c) == c)
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceTruth {
    pub input: u64,
    pub dropped_length: u64,
    pub dropped_garbled: u64,
    pub dropped_banned: u64,
    pub kept_after_clean: u64,
    pub dedup_dropped: u64,
    /// Documents, scalars and UTF-8 bytes after cleaning and dedup.
    pub final_docs: u64,
    pub final_chars: u64,
    pub final_bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub sources: BTreeMap<String, SourceTruth>,
    /// Expected pair count per fine-tuning task, built from the cleaned
    /// (pre-dedup) documents or the bundled task records.
    pub sft_pairs: BTreeMap<String, u64>,
    pub sp_labels: BTreeMap<String, u64>,
}

struct Gen {
    rng: ChaCha8Rng,
    vocab: Vec<char>,
    docs: Vec<RawDocument>,
    html: Vec<(String, String)>,
    truth: GroundTruth,
    /// (id, clean text, source) of every document expected to survive cleaning.
    survivors: Vec<(String, String, SubDataset, BTreeMap<String, String>)>,
    /// Planted copies expected to be removed by dedup.
    dups: BTreeSet<String>,
}

impl Gen {
    fn prose(&mut self, n: usize) -> String {
        let mut s = String::with_capacity(n * 3);
        let mut since_break = 0;
        for i in 0..n {
            let last = i + 1 == n;
            if !last && since_break > 60 && self.rng.gen_bool(0.05) {
                s.push('\n');
                since_break = 0;
            } else if !last && since_break > 8 && self.rng.gen_bool(0.06) {
                s.push('，');
                since_break += 1;
            } else {
                s.push(*self.vocab.choose(&mut self.rng).expect("vocab"));
                since_break += 1;
            }
        }
        s
    }

    fn prose_in(&mut self, len: std::ops::Range<usize>) -> String {
        let n = self.rng.gen_range(len);
        self.prose(n)
    }

    fn truth(&mut self, s: SubDataset) -> &mut SourceTruth {
        self.truth.sources.entry(s.tag().to_string()).or_default()
    }

    fn push(&mut self, source: SubDataset, id: String, raw: String, meta: BTreeMap<String, String>) {
        self.truth(source).input += 1;
        self.docs.push(RawDocument {
            id,
            source,
            timestamp: (source == SubDataset::FN).then(|| "2023-05-01".to_string()),
            text: raw,
            metadata: meta,
        });
    }

    fn kept(&mut self, source: SubDataset, id: String, raw: String, clean: String, meta: BTreeMap<String, String>) {
        self.truth(source).kept_after_clean += 1;
        self.survivors.push((id.clone(), clean, source, meta.clone()));
        self.push(source, id, raw, meta);
    }

    fn dropped_length(&mut self, source: SubDataset, id: String, raw: String) {
        self.truth(source).dropped_length += 1;
        self.push(source, id, raw, BTreeMap::new());
    }

    fn dup(&mut self, source: SubDataset, id: String, text: String) {
        self.truth(source).dedup_dropped += 1;
        self.dups.insert(id.clone());
        self.kept(source, id, text.clone(), text, BTreeMap::new());
    }

    /// A near copy of `text` with one scalar substituted.
    fn near_copy(&mut self, text: &str) -> String {
        let mut cs: Vec<char> = text.chars().collect();
        loop {
            let at = self.rng.gen_range(0..cs.len());
            if cs[at] == '\n' || cs[at] == '，' {
                continue;
            }
            let c = *self.vocab.choose(&mut self.rng).expect("vocab");
            if c != cs[at] {
                cs[at] = c;
                return cs.into_iter().collect();
            }
        }
    }
}

fn meta(pairs: &[(&str, String)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn gen_pretraining(g: &mut Gen) {
    // CP: table line prepended and stripped; 10 fall short of 10,000
    for i in 0..40 {
        let n = if i < 10 {
            9_990 + i
        } else {
            10_000 + g.rng.gen_range(0..400)
        };
        let body = g.prose(n);
        let raw = format!(
            "营收│{}│{}\n{body}",
            g.rng.gen_range(100..999),
            g.rng.gen_range(100..999)
        );
        let id = format!("cp-{i:04}");
        if n < 10_000 {
            g.dropped_length(SubDataset::CP, id, raw);
        } else {
            g.kept(SubDataset::CP, id, raw, body, BTreeMap::new());
        }
    }
    // CA: replacement characters removed before the length check
    for i in 0..80 {
        let n = if i % 4 == 0 {
            g.rng.gen_range(500..1000)
        } else {
            g.rng.gen_range(1000..1500)
        };
        let body = g.prose(n);
        let at = body.char_indices().nth(n / 2).map_or(0, |(b, _)| b);
        let raw = format!("{}\u{FFFD}\u{FFFD}{}", &body[..at], &body[at..]);
        let id = format!("ca-{i:04}");
        if n < 1000 {
            g.dropped_length(SubDataset::CA, id, raw);
        } else {
            g.kept(SubDataset::CA, id, raw, body, BTreeMap::new());
        }
    }
    // RR: lengths straddle both the cleaning floor and the sentiment window
    for i in 0..150 {
        let n = g.rng.gen_range(1900..3200);
        let body = g.prose(n);
        let mut m = BTreeMap::new();
        m.insert("rating".into(), RATINGS_USED[i % RATINGS_USED.len()].to_string());
        if i % 7 != 0 {
            m.insert("title".into(), format!("行业研究报告{i}"));
            m.insert("outline".into(), "1.行业概况\n2.竞争格局\n3.投资建议".to_string());
        }
        if i % 5 != 0 {
            m.insert("conclusion".into(), format!("结论{i}"));
            m.insert("abstract".into(), format!("摘要{i}"));
        } else if i % 10 == 5 {
            m.insert("conclusion".into(), format!("结论{i}"));
            m.insert("abstract".into(), String::new());
        }
        let id = format!("rr-{i:04}");
        if n < 2000 {
            g.truth(SubDataset::RR).dropped_length += 1;
            g.push(SubDataset::RR, id, body, m);
        } else {
            g.kept(SubDataset::RR, id, body.clone(), body, m);
        }
    }
    // FN: unique articles, short items, exact and near duplicates, HTML pages
    let mut fn_originals: Vec<String> = Vec::new();
    for i in 0..280 {
        let id = format!("fn-{i:04}");
        match i % 14 {
            0 => {
                let body = g.prose_in(20..100);
                g.dropped_length(SubDataset::FN, id, body);
            }
            1 if fn_originals.len() > 4 => {
                let src = fn_originals[g.rng.gen_range(0..fn_originals.len())].clone();
                g.dup(SubDataset::FN, id, src);
            }
            2 if fn_originals.len() > 4 => {
                let src = fn_originals[g.rng.gen_range(0..fn_originals.len())].clone();
                let copy = g.near_copy(&src);
                g.dup(SubDataset::FN, id, copy);
            }
            _ => {
                let body = g.prose_in(300..600);
                fn_originals.push(body.clone());
                g.kept(SubDataset::FN, id, body.clone(), body, BTreeMap::new());
            }
        }
    }
    for i in 0..20 {
        let body = g.prose_in(150..400).replace('\n', "");
        let html = format!("<html><head><script>var t = 1;</script></head><body><p>{body}</p></body></html>\n");
        let id = format!("fn-html-{i:03}");
        let text = extract_text_from_html(&html);
        g.html.push((id.clone(), html));
        g.truth(SubDataset::FN).input += 1;
        g.truth(SubDataset::FN).kept_after_clean += 1;
        g.survivors.push((id, text, SubDataset::FN, BTreeMap::new()));
    }
    // SM: short, garbled, banned, clean posts with a few garbled scalars, duplicates
    let banned: Vec<&str> = BANNED_WORDS
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .collect();
    let sentiments = ["Positive", "Negative", "Neutral"];
    let mut sm_originals: Vec<String> = Vec::new();
    for i in 0..330 {
        let id = format!("sm-{i:04}");
        match i % 11 {
            0 => {
                let body = g.prose_in(10..50);
                g.dropped_length(SubDataset::SM, id, body);
            }
            1 => {
                // 40% private-use scalars
                let body = g.prose(60);
                let raw = format!("{body}{}", "\u{E000}".repeat(40));
                g.truth(SubDataset::SM).dropped_garbled += 1;
                g.push(SubDataset::SM, id, raw, BTreeMap::new());
            }
            2 => {
                let body = g.prose_in(80..200);
                let term = banned[i % banned.len()];
                g.truth(SubDataset::SM).dropped_banned += 1;
                g.push(SubDataset::SM, id, format!("{body}{term}"), BTreeMap::new());
            }
            3 | 4 if sm_originals.len() > 4 => {
                let src = sm_originals[g.rng.gen_range(0..sm_originals.len())].clone();
                let text = if i % 11 == 3 { src } else { g.near_copy(&src) };
                g.dup(SubDataset::SM, id, text);
            }
            _ => {
                let body = g.prose_in(150..300);
                sm_originals.push(body.clone());
                // a few garbled scalars, well under the limit, are deleted
                let raw = format!("\u{E001}{body}\u{E002}");
                let m = meta(&[("sentiment", sentiments[i % 3].to_string())]);
                g.kept(SubDataset::SM, id, raw, body, m);
            }
        }
    }
    // Wiki: traditional characters converted, nothing dropped
    for i in 0..100 {
        let simp = g.prose_in(200..500);
        let mut raw = String::new();
        let mut clean = String::new();
        for c in simp.chars() {
            if g.rng.gen_bool(0.1) {
                let (t, s) = TRAD_SIMP[g.rng.gen_range(0..TRAD_SIMP.len())];
                raw.push(t);
                clean.push(s);
            }
            raw.push(c);
            clean.push(c);
        }
        g.kept(SubDataset::Wiki, format!("wiki-{i:04}"), raw, clean, BTreeMap::new());
    }
}

/// Writes the corpus, its config and the ground truth into `dir`.
pub fn generate(dir: &Path, seed: u64) -> Result<GroundTruth> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        vocab: vocab(),
        docs: Vec::new(),
        html: Vec::new(),
        truth: GroundTruth {
            seed,
            ..Default::default()
        },
        survivors: Vec::new(),
        dups: BTreeSet::new(),
    };
    gen_pretraining(&mut g);
    // duplicates survive cleaning but not dedup
    let mut survivor_truth = g.survivors.clone();
    survivor_truth.retain(|(id, ..)| !g.dups.contains(id));
    let mut finals: BTreeMap<SubDataset, (u64, u64, u64)> = BTreeMap::new();
    for (_, text, source, _) in &survivor_truth {
        let e = finals.entry(*source).or_default();
        e.0 += 1;
        e.1 += text.chars().count() as u64;
        e.2 += text.len() as u64;
    }
    for (source, (docs, chars, bytes)) in finals {
        let t = g.truth(source);
        t.final_docs = docs;
        t.final_chars = chars;
        t.final_bytes = bytes;
    }
    sft_truth(&mut g)?;
    let sft = gen_sft_records(&mut g)?;

    let w = |name: &str, text: &str| -> Result<()> {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    };
    let jsonl = |items: &mut dyn Iterator<Item = String>| -> String { items.map(|s| s + "\n").collect() };
    let mut manifest = String::new();
    for source in SubDataset::PRETRAINING {
        let lines = jsonl(&mut g.docs.iter().filter(|d| d.source == source).map(|d| {
            let mut v = serde_json::json!({ "id": d.id, "text": d.text });
            if let Some(ts) = &d.timestamp {
                v["timestamp"] = ts.clone().into();
            }
            if !d.metadata.is_empty() {
                v["metadata"] = serde_json::to_value(&d.metadata).expect("map");
            }
            v.to_string()
        }));
        let name = format!("raw/{}.jsonl", source.tag().to_lowercase());
        w(&name, &lines)?;
        writeln!(
            manifest,
            "[[entries]]\npath = \"{name}\"\nsource = \"{}\"\nformat = \"jsonl\"\n",
            source.tag()
        )
        .unwrap();
    }
    for (id, html) in &g.html {
        let name = format!("raw/html/{id}.html");
        w(&name, html)?;
        writeln!(
            manifest,
            "[[entries]]\npath = \"{name}\"\nsource = \"FN\"\nformat = \"html\"\n"
        )
        .unwrap();
    }
    w("manifest.toml", &manifest)?;
    w("banned_words.txt", BANNED_WORDS)?;
    w("ratings.tsv", RATINGS)?;
    w("event_taxonomy.txt", TAXONOMY)?;
    w(
        "config.toml",
        "[files]\nbanned_words = \"banned_words.txt\"\nratings = \"ratings.tsv\"\ntaxonomy = \"event_taxonomy.txt\"\n\n[pack]\nwindow_len = 1024\nwindow_gap = 512\n",
    )?;
    w(
        "tasks/ed.jsonl",
        &jsonl(&mut sft.0.iter().map(|r| serde_json::to_string(r).expect("record"))),
    )?;
    w(
        "tasks/qa.jsonl",
        &jsonl(&mut sft.1.iter().map(|r| serde_json::to_string(r).expect("record"))),
    )?;
    w(
        "tasks/sp.jsonl",
        &jsonl(&mut sft.2.iter().map(|r| serde_json::to_string(r).expect("record"))),
    )?;
    w(
        "ground_truth.json",
        &(serde_json::to_string_pretty(&g.truth).expect("truth") + "\n"),
    )?;
    Ok(g.truth)
}

fn sft_truth(g: &mut Gen) -> Result<()> {
    let ratings = RatingMap::parse(RATINGS)?;
    let mut sa = 0;
    let mut td = 0;
    let mut rs = 0;
    for (_, text, source, m) in &g.survivors {
        let n = text.chars().count();
        let nonempty = |k: &str| m.get(k).is_some_and(|v| !v.is_empty());
        match source {
            SubDataset::RR => {
                let mapped = m.get("rating").is_some_and(|r| ratings.get(r).is_some());
                sa += ((2000..=3000).contains(&n) && mapped) as u64;
                td += (nonempty("title") && nonempty("outline")) as u64;
                rs += (nonempty("conclusion") && nonempty("abstract")) as u64;
            }
            SubDataset::SM => sa += (n > 100 && m.contains_key("sentiment")) as u64,
            _ => {}
        }
    }
    g.truth.sft_pairs.insert("SA".into(), sa);
    g.truth.sft_pairs.insert("TD".into(), td);
    g.truth.sft_pairs.insert("RS".into(), rs);
    Ok(())
}

fn gen_sft_records(g: &mut Gen) -> Result<(Vec<LabeledDocument>, Vec<QaRecord>, Vec<SpRecord>)> {
    let taxonomy = EventTaxonomy::parse(TAXONOMY)?;
    let leaves: Vec<String> = taxonomy.leaves().map(str::to_string).collect();
    let mut ed = Vec::new();
    let mut ed_pairs = 0;
    for i in 0..108 {
        let text = g.prose(120);
        let labels = match i {
            0..=99 => vec![leaves[i % leaves.len()].clone()],
            100..=104 => vec![],
            _ => vec!["不存在的类别".to_string()],
        };
        ed_pairs += match i {
            0..=99 => 2,
            100..=104 => 1,
            _ => 0,
        };
        ed.push(LabeledDocument {
            id: format!("ed-{i:04}"),
            text,
            labels,
        });
    }
    let mut qa = Vec::new();
    let mut qa_pairs = 0;
    for i in 0..100 {
        let turns = i % 3;
        let mut history: Vec<Turn> = (0..turns)
            .map(|t| Turn {
                q: Some(format!("问题{t}")),
                a: Some(format!("回答{t}")),
            })
            .collect();
        if i % 10 == 9 {
            history.push(Turn {
                q: Some("追问".into()),
                a: None,
            });
        } else {
            qa_pairs += 1;
        }
        qa.push(QaRecord {
            id: format!("qa-{i:04}"),
            paragraph: g.prose(200),
            history,
            question: "公司净利润是多少？".into(),
            answer: format!("{}亿元", i + 1),
        });
    }
    let mut sp = Vec::new();
    let mut sp_pairs = 0;
    for i in 0..200 {
        let closes: Vec<f64> = if i % 40 == 39 {
            vec![10.0, 10.1, 10.2, 10.3]
        } else {
            (0..5).map(|d| 10.0 + d as f64 * 0.05 + (i % 7) as f64).collect()
        };
        let rate = match i % 50 {
            0 => 0.005,
            1 => -0.005,
            _ => (g.rng.gen_range(-200..=200) as f64) / 10_000.0,
        };
        if closes.len() == 5 {
            sp_pairs += 1;
            let label = label_for_truth(rate);
            *g.truth.sp_labels.entry(label.to_string()).or_default() += 1;
        }
        sp.push(SpRecord {
            id: format!("sp-{i:04}"),
            stock_id: format!("{:06}", 600000 + i % 20),
            stock_name: Some(format!("股票{}", i % 20)),
            date: format!("2023-06-{:02}", 1 + i % 28),
            news: vec![g.prose(80)],
            posts: vec![g.prose(40), g.prose(40)],
            closes_5d: closes,
            next_day_change_rate: rate,
        });
    }
    g.truth.sft_pairs.insert("ED".into(), ed_pairs);
    g.truth.sft_pairs.insert("QA".into(), qa_pairs);
    g.truth.sft_pairs.insert("SP".into(), sp_pairs);
    Ok((ed, qa, sp))
}

/// Labels by construction; rates are whole basis points.
fn label_for_truth(rate: f64) -> &'static str {
    let bp = (rate * 10_000.0).round() as i64;
    let label = if bp > 50 {
        "Ascend"
    } else if bp < -50 {
        "Descend"
    } else {
        "Hold"
    };
    debug_assert_eq!(label, label_movement(rate).map(|l| l.as_str()).unwrap_or(""));
    label
}
