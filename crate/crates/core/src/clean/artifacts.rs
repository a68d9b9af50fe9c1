//! Removal of table and figure remnants left behind by text extraction.

/// Share of a line's non-space scalars that must be digits, punctuation or
/// drawing symbols before the line is treated as a table remnant.
pub const TABULAR_LINE_RATIO: f64 = 0.60;

fn is_box_drawing(c: char) -> bool {
    // box drawing, block elements, geometric shapes used as table rules
    matches!(c as u32, 0x2500..=0x259F)
}

fn is_tabular(c: char) -> bool {
    let cp = c as u32;
    c.is_numeric()
        || c.is_ascii_punctuation()
        || is_box_drawing(c)
        || matches!(cp,
            0xA1..=0xBF | 0xD7 | 0xF7
            | 0x2010..=0x205E
            | 0x20A0..=0x20CF
            | 0x2190..=0x22FF
            | 0x3001..=0x3003 | 0x3008..=0x3011 | 0x3014..=0x301F
            | 0xFF01..=0xFF0F | 0xFF1A..=0xFF20 | 0xFF3B..=0xFF40 | 0xFF5B..=0xFF65)
}

fn is_table_line(line: &str) -> bool {
    let mut total = 0usize;
    let mut tabular = 0usize;
    for c in line.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        tabular += is_tabular(c) as usize;
    }
    total > 0 && tabular as f64 > TABULAR_LINE_RATIO * total as f64
}

/// Strips table remnants, control characters (other than `\n`) and
/// replacement characters.
///
/// A line is dropped when more than 60% of its non-space scalars are digits,
/// punctuation or box-drawing symbols; this also removes separator rules such
/// as `-----`. Remaining runs of box-drawing characters are deleted.
pub fn strip_artifacts(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut first = true;
    for line in text.split('\n') {
        // judged before rule characters are deleted so they count toward the ratio
        if is_table_line(line) {
            continue;
        }
        let line: String = line
            .chars()
            .filter(|&c| c != '\u{FFFD}' && !c.is_control() && !is_box_drawing(c))
            .collect();
        if !first {
            out.push('\n');
        }
        out.push_str(&line);
        first = false;
    }
    out
}
