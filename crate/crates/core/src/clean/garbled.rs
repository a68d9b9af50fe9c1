//! Garbled-character classification.
//!
//! A scalar is garbled when it falls outside every allow-listed range. The
//! replacement character, private-use code points, and control characters
//! other than `\n`, `\t`, `\r` are outside all ranges by construction.

/// Inclusive code point ranges that count as legitimate text.
pub const ALLOWED_RANGES: &[(u32, u32)] = &[
    // whitespace controls
    (0x09, 0x0A),
    (0x0D, 0x0D),
    // printable ASCII: space, punctuation, digits, Latin letters
    (0x20, 0x7E),
    // Latin-1 punctuation, symbols and letters
    (0xA0, 0xFF),
    // Latin Extended-A/B
    (0x100, 0x24F),
    // Latin Extended Additional
    (0x1E00, 0x1EFF),
    // General Punctuation, minus zero-width and bidi format characters
    (0x2000, 0x200A),
    (0x2010, 0x2027),
    (0x202F, 0x205F),
    // currency symbols
    (0x20A0, 0x20CF),
    // CJK symbols and punctuation (includes ideographic space)
    (0x3000, 0x303F),
    // CJK Unified Ideographs Extension A
    (0x3400, 0x4DBF),
    // CJK Unified Ideographs
    (0x4E00, 0x9FFF),
    // CJK Compatibility Ideographs
    (0xF900, 0xFAFF),
    // vertical forms and CJK compatibility forms
    (0xFE10, 0xFE19),
    (0xFE30, 0xFE4F),
    // halfwidth and fullwidth forms
    (0xFF01, 0xFFEE),
    // CJK Unified Ideographs Extensions B through F
    (0x20000, 0x2EBEF),
];

#[inline]
pub fn is_garbled(c: char) -> bool {
    let cp = c as u32;
    !ALLOWED_RANGES.iter().any(|&(lo, hi)| (lo..=hi).contains(&cp))
}

/// Fraction of garbled scalars in `text`. Empty text is defined as fully
/// garbled.
pub fn garbled_ratio(text: &str) -> f64 {
    let (garbled, total) = garbled_counts(text);
    if total == 0 {
        return 1.0;
    }
    garbled as f64 / total as f64
}

/// (garbled scalars, total scalars)
pub fn garbled_counts(text: &str) -> (usize, usize) {
    text.chars()
        .fold((0, 0), |(g, t), c| (g + is_garbled(c) as usize, t + 1))
}

pub fn remove_garbled(text: &str) -> String {
    text.chars().filter(|&c| !is_garbled(c)).collect()
}
