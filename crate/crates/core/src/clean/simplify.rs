//! Traditional to simplified Chinese conversion, one character at a time.

use std::collections::HashMap;
use std::sync::OnceLock;

const TABLE: &str = include_str!("../../data/trad_to_simp.tsv");

fn table() -> &'static HashMap<char, char> {
    static MAP: OnceLock<HashMap<char, char>> = OnceLock::new();
    MAP.get_or_init(|| parse_table(TABLE))
}

/// Parses `traditional<TAB>simplified` lines. Only single-scalar pairs are
/// kept, and chains are resolved so every value is a fixpoint.
pub fn parse_table(text: &str) -> HashMap<char, char> {
    let mut map = HashMap::new();
    for line in text.lines() {
        if line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(from), Some(to)) = (cols.next(), cols.next()) else {
            continue;
        };
        let mut f = from.chars();
        let mut t = to.chars();
        if let (Some(a), None, Some(b), None) = (f.next(), f.next(), t.next(), t.next()) {
            if a != b {
                map.insert(a, b);
            }
        }
    }
    let resolved: Vec<(char, char)> = map
        .keys()
        .map(|&k| {
            let mut v = map[&k];
            let mut hops = 0;
            while let Some(&next) = map.get(&v) {
                if next == k || hops > 8 {
                    break;
                }
                v = next;
                hops += 1;
            }
            (k, v)
        })
        .collect();
    resolved.into_iter().filter(|(k, v)| k != v).collect()
}

pub fn simplify_char(c: char) -> char {
    table().get(&c).copied().unwrap_or(c)
}

/// Replaces each mapped traditional character with its simplified form.
/// The scalar count never changes.
pub fn to_simplified(text: &str) -> String {
    text.chars().map(simplify_char).collect()
}

pub fn table_len() -> usize {
    table().len()
}
