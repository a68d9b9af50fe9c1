//! Tolerant HTML-to-text extraction.
//!
//! A single-pass state machine strips tags, comments and script/style blocks
//! and decodes character references. Block-level tags become line breaks.
//! The pass is repeated until the text stops changing, so decoded markup such
//! as `&lt;b&gt;` is also removed and the whole extraction is idempotent.

const BLOCK_TAGS: &[&str] = &[
    "address",
    "article",
    "aside",
    "blockquote",
    "br",
    "dd",
    "div",
    "dl",
    "dt",
    "figcaption",
    "footer",
    "form",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "header",
    "hr",
    "li",
    "main",
    "nav",
    "ol",
    "p",
    "pre",
    "section",
    "table",
    "title",
    "tr",
    "ul",
];

const CELL_TAGS: &[&str] = &["td", "th"];

const RAW_TEXT_TAGS: &[&str] = &["script", "style"];

/// Returns the visible text of `html` with paragraph breaks as `\n` and all
/// other whitespace runs collapsed to one space.
pub fn extract_text_from_html(html: &str) -> String {
    let mut cur = normalize_whitespace(&strip_pass(html));
    loop {
        let next = normalize_whitespace(&strip_pass(&cur));
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

fn strip_pass(input: &str) -> String {
    let bytes = input.as_bytes();
    let mut out = String::with_capacity(input.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'<' => {
                if let Some(next) = consume_markup(input, i, &mut out) {
                    i = next;
                } else {
                    out.push('<');
                    i += 1;
                }
            }
            b'&' => {
                if let Some((ch, len)) = decode_entity(&input[i..]) {
                    out.push(ch);
                    i += len;
                } else {
                    out.push('&');
                    i += 1;
                }
            }
            _ => {
                let ch = input[i..].chars().next().expect("index on char boundary");
                out.push(ch);
                i += ch.len_utf8();
            }
        }
    }
    out
}

/// Handles markup starting at `start` (which holds `<`). Returns the index
/// after the consumed markup, or `None` if the `<` is literal text.
fn consume_markup(input: &str, start: usize, out: &mut String) -> Option<usize> {
    let rest = &input[start..];
    if let Some(body) = rest.strip_prefix("<!--") {
        return Some(match body.find("-->") {
            Some(end) => start + 4 + end + 3,
            None => input.len(),
        });
    }
    let bytes = rest.as_bytes();
    let first = *bytes.get(1)?;
    let closing = first == b'/';
    if !(first.is_ascii_alphabetic() || closing || first == b'!' || first == b'?') {
        return None;
    }
    let end = find_tag_end(bytes)?;
    let name_start = if closing { 2 } else { 1 };
    let name: String = rest[name_start..end]
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    if closing && name.is_empty() {
        return None;
    }
    let after = start + end + 1;
    if !closing && RAW_TEXT_TAGS.contains(&name.as_str()) {
        let close = format!("</{name}");
        let tail = &input[after..];
        return Some(match find_ascii_ci(tail, &close) {
            Some(pos) => {
                let from = after + pos;
                match input[from..].find('>') {
                    Some(gt) => from + gt + 1,
                    None => input.len(),
                }
            }
            None => input.len(),
        });
    }
    if BLOCK_TAGS.contains(&name.as_str()) {
        out.push('\n');
    } else if CELL_TAGS.contains(&name.as_str()) {
        out.push(' ');
    }
    Some(after)
}

/// Index of the `>` closing the tag at the start of `bytes`, skipping quoted
/// attribute values.
fn find_tag_end(bytes: &[u8]) -> Option<usize> {
    let mut quote: Option<u8> = None;
    for (i, &b) in bytes.iter().enumerate().skip(1) {
        match quote {
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None => match b {
                b'"' | b'\'' => quote = Some(b),
                b'>' => return Some(i),
                _ => {}
            },
        }
    }
    None
}

fn find_ascii_ci(haystack: &str, needle: &str) -> Option<usize> {
    let h = haystack.as_bytes();
    let n = needle.as_bytes();
    if n.len() > h.len() {
        return None;
    }
    (0..=h.len() - n.len()).find(|&i| h[i..i + n.len()].eq_ignore_ascii_case(n))
}

const NAMED_ENTITIES: &[(&str, char)] = &[
    ("amp", '&'),
    ("lt", '<'),
    ("gt", '>'),
    ("quot", '"'),
    ("apos", '\''),
    ("nbsp", ' '),
    ("yen", '¥'),
    ("copy", '©'),
    ("reg", '®'),
    ("middot", '·'),
    ("hellip", '…'),
    ("mdash", '—'),
    ("ndash", '–'),
    ("ldquo", '“'),
    ("rdquo", '”'),
    ("lsquo", '‘'),
    ("rsquo", '’'),
    ("times", '×'),
    ("divide", '÷'),
    ("deg", '°'),
];

/// Decodes a character reference at the start of `s`, returning the char
/// and the number of bytes consumed. A terminating `;` is required.
fn decode_entity(s: &str) -> Option<(char, usize)> {
    let semi = s.as_bytes()[..s.len().min(12)].iter().position(|&b| b == b';')?;
    let body = &s[1..semi];
    let ch = if let Some(num) = body.strip_prefix('#') {
        let code = if let Some(hex) = num.strip_prefix(['x', 'X']) {
            if hex.is_empty() || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
                return None;
            }
            u32::from_str_radix(hex, 16).ok()?
        } else {
            if num.is_empty() || !num.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            num.parse().ok()?
        };
        if code == 0 {
            return None;
        }
        char::from_u32(code)?
    } else {
        NAMED_ENTITIES.iter().find(|(n, _)| *n == body)?.1
    };
    Some((ch, semi + 1))
}

fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.split('\n') {
        let mut words = line.split(char::is_whitespace).filter(|w| !w.is_empty()).peekable();
        if words.peek().is_none() {
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        let mut first = true;
        for w in words {
            if !first {
                out.push(' ');
            }
            out.push_str(w);
            first = false;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tag() {
        assert_eq!(extract_text_from_html("<p>A股上涨</p>"), "A股上涨");
    }

    #[test]
    fn script_removed() {
        assert_eq!(extract_text_from_html("<script>x=1</script>正文"), "正文");
        assert_eq!(extract_text_from_html("<STYLE type=\"a>b\">p{}</Style >正文"), "正文");
    }

    #[test]
    fn entities_and_nesting() {
        let html = "<div><p>利润 &amp; <b>收入</b></p><p>第二段&#x4E00;&#20108;</p></div>";
        assert_eq!(extract_text_from_html(html), "利润 & 收入\n第二段一二");
    }

    #[test]
    fn degenerate_input() {
        assert_eq!(extract_text_from_html(""), "");
        assert_eq!(extract_text_from_html("a < b && c"), "a < b && c");
        assert_eq!(extract_text_from_html("<!-- open comment"), "");
        assert_eq!(extract_text_from_html("text <a href='x"), "text <a href='x");
    }

    #[test]
    fn double_escaped_markup_converges() {
        let once = extract_text_from_html("&amp;lt;b&amp;gt;加粗");
        assert_eq!(once, "加粗");
        assert_eq!(extract_text_from_html(&once), once);
    }

    #[test]
    fn whitespace_collapsed_paragraphs_kept() {
        assert_eq!(extract_text_from_html("  a \t b <br> c\n\n\n d  "), "a b\nc\nd");
    }
}
