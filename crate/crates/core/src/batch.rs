//! Input truncation and length-sorted batch planning for fine-tuning.

use serde::{Deserialize, Serialize};

use crate::sft::{content_slot, render_prompt, InstructionPair, TemplateError};
use crate::tokenizer::{TokenizeError, Tokenizer};

pub const DEFAULT_MAX_INPUT_TOKENS: usize = 2048;
pub const DEFAULT_TOKEN_BUDGET: usize = 131_072;
pub const MIN_BATCH: usize = 64;
pub const MAX_BATCH: usize = 512;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TruncateError {
    #[error("template overhead of {overhead} tokens exceeds the {max} token limit")]
    TemplateTooLong { overhead: usize, max: usize },
    #[error("pair has no slot values to truncate")]
    NoSlots,
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
}

/// Tokens in `instruction` plus `input`.
pub fn input_tokens<T: Tokenizer + ?Sized>(pair: &InstructionPair, tok: &T) -> Result<usize, TokenizeError> {
    Ok(tok.count_tokens(&pair.instruction)? + tok.count_tokens(&pair.input)?)
}

/// Tokens in the full training sequence: instruction, input and output.
pub fn pair_tokens<T: Tokenizer + ?Sized>(pair: &InstructionPair, tok: &T) -> Result<usize, TokenizeError> {
    Ok(input_tokens(pair, tok)? + tok.count_tokens(&pair.output)?)
}

/// Cuts the tail of the content slot so `instruction + input` fits in
/// `max_tokens`. Pairs already within budget come back unchanged; template
/// text and output are never shortened.
pub fn truncate_pair<T: Tokenizer + ?Sized>(
    pair: &InstructionPair,
    tok: &T,
    max_tokens: usize,
) -> Result<InstructionPair, TruncateError> {
    if input_tokens(pair, tok)? <= max_tokens {
        return Ok(pair.clone());
    }
    let slot = content_slot(pair.task).ok_or(TruncateError::NoSlots)?;
    let content = pair.slots.get(slot).ok_or(TruncateError::NoSlots)?;
    let mut slots = pair.slots.clone();
    slots.insert(slot.to_string(), String::new());
    let overhead = tok.count_tokens(&render_prompt(pair.task, &slots)?)? + tok.count_tokens(&pair.input)?;
    if overhead > max_tokens {
        return Err(TruncateError::TemplateTooLong {
            overhead,
            max: max_tokens,
        });
    }
    let ids = tok.tokenize(content)?;
    let mut keep = (max_tokens - overhead).min(ids.len());
    loop {
        // a cut inside a multi-token character does not decode; back off
        if let Ok(prefix) = tok.detokenize(&ids[..keep]) {
            slots.insert(slot.to_string(), prefix);
            let instruction = render_prompt(pair.task, &slots)?;
            if tok.count_tokens(&instruction)? + tok.count_tokens(&pair.input)? <= max_tokens {
                let mut out = pair.clone();
                out.instruction = instruction;
                out.slots = slots;
                return Ok(out);
            }
        }
        if keep == 0 {
            return Err(TruncateError::TemplateTooLong {
                overhead,
                max: max_tokens,
            });
        }
        keep -= 1;
    }
}

/// One planned batch. `pair_ids` index into the planned list unless the
/// caller maps them to its own ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub batch_id: usize,
    pub pair_ids: Vec<String>,
    pub max_len: usize,
    pub remainder: bool,
}

/// Size allowed for a batch whose longest member has `max_len` tokens.
pub fn batch_size_for(max_len: usize, token_budget: usize) -> usize {
    (token_budget / max_len.max(1)).clamp(MIN_BATCH, MAX_BATCH)
}

/// Groups items by ascending length. Each batch takes as many items as
/// `clamp(budget / longest, 64, 512)` allows; only a final batch with fewer
/// than 64 items is marked as a remainder. Returns (member indices, longest)
/// per batch.
pub fn plan_by_length(lengths: &[usize], token_budget: usize) -> Vec<(Vec<usize>, usize, bool)> {
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by_key(|&i| (lengths[i], i));
    let mut batches = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let remaining = order.len() - start;
        // largest size s with s <= f(len of s-th item); f is non-increasing in s
        let mut size = 1;
        while size < remaining.min(MAX_BATCH) {
            let next = size + 1;
            if next <= batch_size_for(lengths[order[start + next - 1]], token_budget) {
                size = next;
            } else {
                break;
            }
        }
        let members: Vec<usize> = order[start..start + size].to_vec();
        let max_len = lengths[*members.last().expect("nonempty batch")];
        batches.push((members, max_len, size < MIN_BATCH));
        start += size;
    }
    batches
}

/// Plans batches over pairs, using full sequence length. Pair ids are
/// `<task>:<position>`.
pub fn plan_batches<T: Tokenizer + ?Sized>(
    pairs: &[InstructionPair],
    tok: &T,
    token_budget: usize,
) -> Result<Vec<Batch>, TokenizeError> {
    let lengths = pairs
        .iter()
        .map(|p| pair_tokens(p, tok))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(plan_by_length(&lengths, token_budget)
        .into_iter()
        .enumerate()
        .map(|(batch_id, (members, max_len, remainder))| Batch {
            batch_id,
            pair_ids: members.iter().map(|&i| pair_id(&pairs[i], i)).collect(),
            max_len,
            remainder,
        })
        .collect())
}

pub fn pair_id(pair: &InstructionPair, position: usize) -> String {
    format!("{}:{}", pair.task, position)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::build_rs;
    use crate::tokenizer::ByteTokenizer;
    use crate::{CleanDocument, SubDataset};

    fn rs_pair(body: &str) -> InstructionPair {
        let doc = CleanDocument {
            id: "r".into(),
            source: SubDataset::RR,
            timestamp: None,
            text: body.into(),
            metadata: [("conclusion", "C"), ("abstract", "A")]
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            clean_text: body.into(),
            char_count: body.chars().count(),
            garbled_ratio: 0.0,
        };
        build_rs(&[doc]).pairs.remove(0)
    }

    fn overhead() -> usize {
        rs_pair("").instruction.len()
    }

    #[test]
    fn one_over_budget_loses_last_token() {
        let body: String = (0..2048 - overhead() + 1)
            .map(|i| (b'a' + (i % 26) as u8) as char)
            .collect();
        let p = rs_pair(&body);
        assert_eq!(input_tokens(&p, &ByteTokenizer).unwrap(), 2049);
        let t = truncate_pair(&p, &ByteTokenizer, 2048).unwrap();
        assert_eq!(input_tokens(&t, &ByteTokenizer).unwrap(), 2048);
        assert_eq!(t.slots["report"], body[..body.len() - 1]);
        assert_eq!(t.output, p.output);
    }

    #[test]
    fn under_budget_unchanged() {
        let p = rs_pair("short");
        assert_eq!(truncate_pair(&p, &ByteTokenizer, 2048).unwrap(), p);
    }

    #[test]
    fn template_too_long() {
        let p = rs_pair("content");
        assert!(matches!(
            truncate_pair(&p, &ByteTokenizer, 10),
            Err(TruncateError::TemplateTooLong { .. })
        ));
    }

    #[test]
    fn multibyte_cut_backs_off() {
        let p = rs_pair(&"研".repeat(1000));
        let t = truncate_pair(&p, &ByteTokenizer, overhead() + 4).unwrap();
        assert_eq!(t.slots["report"], "研");
    }

    #[test]
    fn uniform_256_gives_two_batches() {
        let plan = plan_by_length(&[256; 1000], DEFAULT_TOKEN_BUDGET);
        let sizes: Vec<usize> = plan.iter().map(|b| b.0.len()).collect();
        assert_eq!(sizes, [512, 488]);
        assert!(plan.iter().all(|b| !b.2));
    }

    #[test]
    fn long_pairs_leave_remainder() {
        let plan = plan_by_length(&[2048; 100], DEFAULT_TOKEN_BUDGET);
        let sizes: Vec<(usize, bool)> = plan.iter().map(|b| (b.0.len(), b.2)).collect();
        assert_eq!(sizes, [(64, false), (36, true)]);
    }

    #[test]
    fn empty_plan() {
        assert!(plan_by_length(&[], DEFAULT_TOKEN_BUDGET).is_empty());
    }
}
