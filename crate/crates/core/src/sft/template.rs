//! Instruction templates for the six fine-tuning tasks. `[name]` marks a
//! slot; everything else is emitted byte for byte.

use std::collections::BTreeMap;

use crate::model::SubDataset;

pub const SA_TEMPLATE: &str = "Please analyze the sentiment of the following financial paragraph. The answer should be choose from {\"Positive\", \"Negative\", \"Neutral\"}. The paragraph is \"[paragraph]\".";
pub const ED_TEMPLATE: &str = "Please detect the \"[event category]\" from the following financial paragraph. If the \"[event category]\" exists, find all the event, otherwise, return None. The paragraph is \"[paragraph]\".";
pub const RS_TEMPLATE: &str = "Please summarize the following financial report. The report is \"[report]\".";
pub const TD_TEMPLATE: &str =
    "Please decompose the following financial topic from multiple small aspects. The topic is \"[topic]\".";
pub const QA_TEMPLATE: &str = "Please answer the questions based on given financial paragraph and conversation history. The financial paragraph is \"[paragraph]\". The conversation history is \"[history]\". The question is \"[question]\".";
pub const SP_TEMPLATE: &str = "Please analyze the text information and price information of \"[stock name]\", and determine how will the price change. The answer should be choose from {\"Positive\", \"Negative\", \"Neutral\"}. The text information is \"[text]\". The price information is \"[price]\".";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("missing slot \"{0}\"")]
    MissingSlot(String),
    #[error("{0} is not a fine-tuning task")]
    NotATask(SubDataset),
}

pub fn template_for(task: SubDataset) -> Result<&'static str, TemplateError> {
    Ok(match task {
        SubDataset::SA => SA_TEMPLATE,
        SubDataset::ED => ED_TEMPLATE,
        SubDataset::RS => RS_TEMPLATE,
        SubDataset::TD => TD_TEMPLATE,
        SubDataset::QA => QA_TEMPLATE,
        SubDataset::SP => SP_TEMPLATE,
        other => return Err(TemplateError::NotATask(other)),
    })
}

/// The slot holding the long, truncatable content of each task.
pub fn content_slot(task: SubDataset) -> Option<&'static str> {
    match task {
        SubDataset::SA | SubDataset::ED | SubDataset::QA => Some("paragraph"),
        SubDataset::RS => Some("report"),
        SubDataset::TD => Some("topic"),
        SubDataset::SP => Some("text"),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Segment<'a> {
    Literal(&'a str),
    Slot(&'a str),
}

pub fn segments(template: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('[') {
        let Some(close) = rest[open..].find(']') else {
            break;
        };
        if open > 0 {
            out.push(Segment::Literal(&rest[..open]));
        }
        out.push(Segment::Slot(&rest[open + 1..open + close]));
        rest = &rest[open + close + 1..];
    }
    if !rest.is_empty() {
        out.push(Segment::Literal(rest));
    }
    out
}

/// Slot names of a task's template, in first-appearance order.
pub fn slot_names(task: SubDataset) -> Result<Vec<&'static str>, TemplateError> {
    let mut names = Vec::new();
    for seg in segments(template_for(task)?) {
        if let Segment::Slot(s) = seg {
            if !names.contains(&s) {
                names.push(s);
            }
        }
    }
    Ok(names)
}

/// Fills every slot of the task's template. Slot values are inserted
/// verbatim and never rescanned.
pub fn render_prompt(task: SubDataset, slots: &BTreeMap<String, String>) -> Result<String, TemplateError> {
    let template = template_for(task)?;
    let mut out = String::with_capacity(template.len() + slots.values().map(String::len).sum::<usize>());
    for seg in segments(template) {
        match seg {
            Segment::Literal(s) => out.push_str(s),
            Segment::Slot(name) => out.push_str(
                slots
                    .get(name)
                    .ok_or_else(|| TemplateError::MissingSlot(name.to_string()))?,
            ),
        }
    }
    Ok(out)
}
