use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{label_movement, InstructionPair, RatingMap, Sentiment, SpLabelStyle};
use crate::dedup::hash_bytes;
use crate::model::{CleanDocument, EventTaxonomy, SubDataset};

/// Research reports used for sentiment pairs must fall in this scalar-length
/// window (inclusive).
pub const SA_REPORT_CHARS: (usize, usize) = (2000, 3000);
/// Posts must be strictly longer than this to become sentiment pairs.
pub const SA_POST_MIN_CHARS: usize = 100;

/// A record that did not become a pair, with the reason.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct BuildOutput {
    pub pairs: Vec<InstructionPair>,
    pub skipped: Vec<Skip>,
}

impl BuildOutput {
    fn skip(&mut self, id: &str, reason: impl Into<String>) {
        self.skipped.push(Skip {
            id: id.to_string(),
            reason: reason.into(),
        });
    }

    fn push(&mut self, task: SubDataset, slots: &[(&str, String)], output: String, provenance: &[&str]) {
        let slots: BTreeMap<String, String> = slots.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
        let pair = InstructionPair::new(task, slots, output, provenance.iter().map(|s| s.to_string()).collect())
            .expect("builders fill every slot of their template");
        self.pairs.push(pair);
    }

    pub fn extend(&mut self, other: BuildOutput) {
        self.pairs.extend(other.pairs);
        self.skipped.extend(other.skipped);
    }
}

fn nonempty<'a>(doc: &'a CleanDocument, key: &str) -> Option<&'a str> {
    doc.meta(key).filter(|v| !v.trim().is_empty())
}

/// Sentiment pairs from research reports: the report text is the paragraph,
/// its mapped investment rating the answer. Reports outside
/// [`SA_REPORT_CHARS`] or with an unmapped rating are skipped.
pub fn build_sa_from_reports(reports: &[CleanDocument], ratings: &RatingMap) -> BuildOutput {
    let mut out = BuildOutput::default();
    for r in reports {
        if r.char_count < SA_REPORT_CHARS.0 || r.char_count > SA_REPORT_CHARS.1 {
            out.skip(&r.id, "length");
            continue;
        }
        let Some(sentiment) = r.meta("rating").and_then(|v| ratings.get(v)) else {
            out.skip(&r.id, "unmapped");
            continue;
        };
        out.push(
            SubDataset::SA,
            &[("paragraph", r.clean_text.clone())],
            sentiment.to_string(),
            &[&r.id],
        );
    }
    out
}

/// Sentiment pairs from externally labelled posts (`sentiment` metadata).
pub fn build_sa_from_posts(posts: &[CleanDocument]) -> BuildOutput {
    let mut out = BuildOutput::default();
    for p in posts {
        if p.char_count <= SA_POST_MIN_CHARS {
            out.skip(&p.id, "length");
            continue;
        }
        let Some(label) = p.meta("sentiment") else {
            out.skip(&p.id, "unlabeled");
            continue;
        };
        let sentiment: Sentiment = match label.parse() {
            Ok(s) => s,
            Err(e) => {
                out.skip(&p.id, e);
                continue;
            }
        };
        out.push(
            SubDataset::SA,
            &[("paragraph", p.clean_text.clone())],
            sentiment.to_string(),
            &[&p.id],
        );
    }
    out
}

/// Routes each clean document to the report or post builder by source.
pub fn build_sa(docs: &[CleanDocument], ratings: &RatingMap) -> BuildOutput {
    let (reports, rest): (Vec<_>, Vec<_>) = docs.iter().cloned().partition(|d| d.source == SubDataset::RR);
    let (posts, other): (Vec<_>, Vec<_>) = rest.into_iter().partition(|d| d.source == SubDataset::SM);
    let mut out = build_sa_from_reports(&reports, ratings);
    out.extend(build_sa_from_posts(&posts));
    for d in other {
        out.skip(&d.id, format!("source {} not used for SA", d.source));
    }
    out
}

/// A document with zero or more event-category labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EdOptions {
    /// Negative queries sampled per positive query.
    pub negatives_per_positive: usize,
    pub seed: u64,
}

impl Default for EdOptions {
    fn default() -> Self {
        EdOptions {
            negatives_per_positive: 1,
            seed: 0,
        }
    }
}

/// Event-detection pairs, one per queried category.
///
/// Every distinct label is queried; the answer lists the document's labels
/// at or below that category. Negative queries are leaves unrelated to any
/// label and are answered with `None`. Documents carrying a label that is not
/// in the taxonomy are rejected whole.
pub fn build_ed(docs: &[LabeledDocument], taxonomy: &EventTaxonomy, opts: &EdOptions) -> BuildOutput {
    let mut out = BuildOutput::default();
    for d in docs {
        if let Some(bad) = d.labels.iter().find(|l| !taxonomy.contains(l)) {
            out.skip(&d.id, format!("label {bad:?} not in taxonomy"));
            continue;
        }
        let mut labels: Vec<&str> = Vec::new();
        for l in &d.labels {
            if !labels.contains(&l.as_str()) {
                labels.push(l);
            }
        }
        for &category in &labels {
            let found: Vec<&str> = labels
                .iter()
                .copied()
                .filter(|l| taxonomy.is_within(l, category))
                .collect();
            out.push(
                SubDataset::ED,
                &[("event category", category.to_string()), ("paragraph", d.text.clone())],
                found.join(", "),
                &[&d.id],
            );
        }
        let unrelated: Vec<&str> = taxonomy
            .leaves()
            .filter(|leaf| {
                labels
                    .iter()
                    .all(|l| !taxonomy.is_within(l, leaf) && !taxonomy.is_within(leaf, l))
            })
            .collect();
        let wanted = (opts.negatives_per_positive * labels.len().max(1)).min(unrelated.len());
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ hash_bytes(d.id.as_bytes()));
        let mut picks = sample(&mut rng, unrelated.len(), wanted).into_vec();
        picks.sort_unstable();
        for i in picks {
            out.push(
                SubDataset::ED,
                &[
                    ("event category", unrelated[i].to_string()),
                    ("paragraph", d.text.clone()),
                ],
                "None".to_string(),
                &[&d.id],
            );
        }
    }
    out
}

/// Topic-decomposition pairs: title is the topic, outline the answer.
pub fn build_td(reports: &[CleanDocument]) -> BuildOutput {
    let mut out = BuildOutput::default();
    for r in reports {
        let (Some(title), Some(outline)) = (nonempty(r, "title"), nonempty(r, "outline")) else {
            out.skip(&r.id, "missing title or outline");
            continue;
        };
        out.push(
            SubDataset::TD,
            &[("topic", title.to_string())],
            outline.to_string(),
            &[&r.id],
        );
    }
    out
}

/// Report-summary pairs: body is the report, `conclusion + "\n" + abstract`
/// the answer.
pub fn build_rs(reports: &[CleanDocument]) -> BuildOutput {
    let mut out = BuildOutput::default();
    for r in reports {
        let (Some(conclusion), Some(abstract_)) = (nonempty(r, "conclusion"), nonempty(r, "abstract")) else {
            out.skip(&r.id, "missing conclusion or abstract");
            continue;
        };
        out.push(
            SubDataset::RS,
            &[("report", r.clean_text.clone())],
            format!("{conclusion}\n{abstract_}"),
            &[&r.id],
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    #[serde(default)]
    pub q: Option<String>,
    #[serde(default)]
    pub a: Option<String>,
}

/// A translated question-answering record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaRecord {
    pub id: String,
    pub paragraph: String,
    #[serde(default)]
    pub history: Vec<Turn>,
    pub question: String,
    pub answer: String,
}

/// `Q: q1\nA: a1\nQ: q2\nA: a2`; `None` when a turn lacks either side.
pub fn serialize_history(history: &[Turn]) -> Option<String> {
    let mut parts = Vec::with_capacity(history.len());
    for t in history {
        match (&t.q, &t.a) {
            (Some(q), Some(a)) if !q.is_empty() && !a.is_empty() => parts.push(format!("Q: {q}\nA: {a}")),
            _ => return None,
        }
    }
    Some(parts.join("\n"))
}

pub fn build_qa(records: &[QaRecord]) -> BuildOutput {
    let mut out = BuildOutput::default();
    for r in records {
        if r.paragraph.trim().is_empty() || r.question.trim().is_empty() {
            out.skip(&r.id, "empty paragraph or question");
            continue;
        }
        if r.answer.trim().is_empty() {
            out.skip(&r.id, "empty answer");
            continue;
        }
        let Some(history) = serialize_history(&r.history) else {
            out.skip(&r.id, "malformed conversation turn");
            continue;
        };
        out.push(
            SubDataset::QA,
            &[
                ("paragraph", r.paragraph.clone()),
                ("history", history),
                ("question", r.question.clone()),
            ],
            r.answer.clone(),
            &[&r.id],
        );
    }
    out
}

/// Five closing prices and the next day's change rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceRecord {
    pub stock_id: String,
    pub date: String,
    pub closes_5d: [f64; 5],
    pub next_day_change_rate: f64,
}

impl PriceRecord {
    pub fn new(stock_id: &str, date: &str, closes: &[f64], rate: f64) -> Result<PriceRecord, String> {
        let closes_5d: [f64; 5] = closes
            .try_into()
            .map_err(|_| format!("expected 5 closing prices, got {}", closes.len()))?;
        if let Some(bad) = closes_5d.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(format!("closing price {bad} is not positive"));
        }
        Ok(PriceRecord {
            stock_id: stock_id.to_string(),
            date: date.to_string(),
            closes_5d,
            next_day_change_rate: rate,
        })
    }

    /// Comma-separated closes, shortest round-trip decimal form.
    pub fn price_slot(&self) -> String {
        self.closes_5d.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
    }
}

/// Raw stock-movement input record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpRecord {
    pub id: String,
    pub stock_id: String,
    #[serde(default)]
    pub stock_name: Option<String>,
    pub date: String,
    #[serde(default)]
    pub news: Vec<String>,
    #[serde(default)]
    pub posts: Vec<String>,
    pub closes_5d: Vec<f64>,
    pub next_day_change_rate: f64,
}

pub fn build_sp(records: &[SpRecord], style: SpLabelStyle) -> BuildOutput {
    let mut out = BuildOutput::default();
    for r in records {
        if r.news.is_empty() && r.posts.is_empty() {
            out.skip(&r.id, "no news or posts");
            continue;
        }
        let price = match PriceRecord::new(&r.stock_id, &r.date, &r.closes_5d, r.next_day_change_rate) {
            Ok(p) => p,
            Err(e) => {
                out.skip(&r.id, e);
                continue;
            }
        };
        let label = match label_movement(price.next_day_change_rate) {
            Ok(l) => l,
            Err(e) => {
                out.skip(&r.id, e.to_string());
                continue;
            }
        };
        let output = match style {
            SpLabelStyle::Movement => label.as_str().to_string(),
            SpLabelStyle::Sentiment => label.as_sentiment().to_string(),
        };
        let text = r.news.iter().chain(&r.posts).cloned().collect::<Vec<_>>().join("\n");
        let name = r.stock_name.clone().unwrap_or_else(|| r.stock_id.clone());
        out.push(
            SubDataset::SP,
            &[("stock name", name), ("text", text), ("price", price.price_slot())],
            output,
            &[&r.id],
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clean(id: &str, source: SubDataset, text: &str, meta: &[(&str, &str)]) -> CleanDocument {
        CleanDocument {
            id: id.into(),
            source,
            timestamp: None,
            text: text.into(),
            metadata: meta.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            clean_text: text.into(),
            char_count: text.chars().count(),
            garbled_ratio: 0.0,
        }
    }

    #[test]
    fn sa_reports() {
        let map = RatingMap::from_pairs([("买入", Sentiment::Positive)]);
        let ok = clean("r1", SubDataset::RR, &"研".repeat(2500), &[("rating", "买入")]);
        let short = clean("r2", SubDataset::RR, &"研".repeat(1999), &[("rating", "买入")]);
        let unrated = clean("r3", SubDataset::RR, &"研".repeat(2500), &[]);
        let out = build_sa_from_reports(&[ok, short, unrated], &map);
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].output, "Positive");
        assert_eq!(
            out.skipped[0],
            Skip {
                id: "r2".into(),
                reason: "length".into()
            }
        );
        assert_eq!(out.skipped[1].reason, "unmapped");
        let edge = clean("r4", SubDataset::RR, &"研".repeat(3000), &[("rating", "买入")]);
        assert_eq!(build_sa_from_reports(&[edge], &map).pairs.len(), 1);
    }

    #[test]
    fn sa_posts() {
        let neutral = clean("p1", SubDataset::SM, &"帖".repeat(150), &[("sentiment", "Neutral")]);
        let boundary = clean("p2", SubDataset::SM, &"帖".repeat(100), &[("sentiment", "Neutral")]);
        let bullish = clean("p3", SubDataset::SM, &"帖".repeat(150), &[("sentiment", "Bullish")]);
        let out = build_sa_from_posts(&[neutral, boundary, bullish]);
        assert_eq!(out.pairs.len(), 1);
        assert_eq!(out.pairs[0].output, "Neutral");
        assert_eq!(out.skipped[0].reason, "length");
        assert!(out.skipped[1].reason.contains("Bullish"));
    }

    fn taxonomy() -> EventTaxonomy {
        EventTaxonomy::parse("公司事件\n  M&A\n  Bankruptcy\n  高管变动\n    辞职\n宏观\n  降息\n").unwrap()
    }

    #[test]
    fn ed_positive_and_negative() {
        let doc = LabeledDocument {
            id: "e1".into(),
            text: "甲公司收购乙公司".into(),
            labels: vec!["M&A".into()],
        };
        let out = build_ed(&[doc], &taxonomy(), &EdOptions::default());
        assert_eq!(out.pairs.len(), 2);
        assert_eq!(out.pairs[0].output, "M&A");
        assert!(out.pairs[0].instruction.contains("\"M&A\""));
        assert_eq!(out.pairs[1].output, "None");
        assert_ne!(out.pairs[1].slots["event category"], "M&A");
    }

    #[test]
    fn ed_queried_absent_category() {
        // every unrelated leaf is queried when enough negatives are requested
        let doc = LabeledDocument {
            id: "e1".into(),
            text: "t".into(),
            labels: vec!["M&A".into()],
        };
        let out = build_ed(
            &[doc],
            &taxonomy(),
            &EdOptions {
                negatives_per_positive: 10,
                seed: 3,
            },
        );
        let bankrupt = out
            .pairs
            .iter()
            .find(|p| p.slots["event category"] == "Bankruptcy")
            .unwrap();
        assert_eq!(bankrupt.output, "None");
    }

    #[test]
    fn ed_unknown_label() {
        let doc = LabeledDocument {
            id: "e1".into(),
            text: "t".into(),
            labels: vec!["NotACategory".into()],
        };
        let out = build_ed(&[doc], &taxonomy(), &EdOptions::default());
        assert!(out.pairs.is_empty());
        assert!(out.skipped[0].reason.contains("NotACategory"));
    }

    #[test]
    fn td_routing() {
        let r = clean(
            "t1",
            SubDataset::RR,
            "body",
            &[("title", "新能源汽车行业分析"), ("outline", "1.市场规模\n2.竞争格局")],
        );
        let out = build_td(&[r]);
        assert_eq!(out.pairs[0].slots["topic"], "新能源汽车行业分析");
        assert_eq!(out.pairs[0].output, "1.市场规模\n2.竞争格局");
        let no_outline = clean("t2", SubDataset::RR, "b", &[("title", "x")]);
        let empty_title = clean("t3", SubDataset::RR, "b", &[("title", " "), ("outline", "o")]);
        assert_eq!(build_td(&[no_outline, empty_title]).skipped.len(), 2);
    }

    #[test]
    fn rs_routing() {
        let r = clean("s1", SubDataset::RR, "B", &[("conclusion", "C"), ("abstract", "A")]);
        let out = build_rs(&[r]);
        assert_eq!(out.pairs[0].slots["report"], "B");
        assert_eq!(out.pairs[0].output, "C\nA");
        assert!(build_rs(&[clean("s2", SubDataset::RR, "B", &[("conclusion", "C")])])
            .pairs
            .is_empty());
    }

    #[test]
    fn qa_history() {
        let turn = |q: &str, a: Option<&str>| Turn {
            q: Some(q.into()),
            a: a.map(Into::into),
        };
        let rec = |history| QaRecord {
            id: "q".into(),
            paragraph: "p".into(),
            history,
            question: "why".into(),
            answer: "because".into(),
        };
        let out = build_qa(&[rec(vec![])]);
        assert_eq!(out.pairs[0].slots["history"], "");
        let out = build_qa(&[rec(vec![turn("q1", Some("a1")), turn("q2", Some("a2"))])]);
        assert_eq!(out.pairs[0].slots["history"], "Q: q1\nA: a1\nQ: q2\nA: a2");
        let out = build_qa(&[rec(vec![turn("q1", None)])]);
        assert!(out.pairs.is_empty());
        assert_eq!(out.skipped[0].reason, "malformed conversation turn");
    }

    fn sp(rate: f64, closes: Vec<f64>) -> SpRecord {
        SpRecord {
            id: "sp1".into(),
            stock_id: "600000".into(),
            stock_name: Some("浦发银行".into()),
            date: "2022-01-04".into(),
            news: vec!["新闻".into()],
            posts: vec!["帖子".into()],
            closes_5d: closes,
            next_day_change_rate: rate,
        }
    }

    #[test]
    fn sp_pairs() {
        let out = build_sp(&[sp(0.02, vec![10.0, 10.1, 10.2, 10.15, 10.3])], SpLabelStyle::Movement);
        let p = &out.pairs[0];
        assert_eq!(p.output, "Ascend");
        assert_eq!(p.slots["text"], "新闻\n帖子");
        assert_eq!(p.slots["price"], "10,10.1,10.2,10.15,10.3");
        let remap = build_sp(&[sp(-0.02, vec![1.0; 5])], SpLabelStyle::Sentiment);
        assert_eq!(remap.pairs[0].output, "Negative");
        let bad = build_sp(&[sp(0.0, vec![1.0; 4])], SpLabelStyle::Movement);
        assert!(bad.pairs.is_empty());
        assert!(bad.skipped[0].reason.contains("5 closing prices"));
    }
}
