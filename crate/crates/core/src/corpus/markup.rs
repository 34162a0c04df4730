//! Splits question body markup into prose and block-level code.
//!
//! A code block is a `<code>` element nested inside `<pre>`. Inline `<code>`
//! spans stay in the prose.

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BodyParts {
    pub text: String,
    pub code_blocks: Vec<String>,
}

// Tags that never separate words when removed.
const INLINE_TAGS: &[&str] = &[
    "a", "abbr", "b", "code", "em", "i", "kbd", "s", "span", "strike", "strong", "sub", "sup", "u",
];

struct Tag<'a> {
    name: &'a str,
    closing: bool,
    self_closing: bool,
}

fn parse_tag(inner: &str) -> Option<Tag<'_>> {
    let (closing, rest) = match inner.strip_prefix('/') {
        Some(r) => (true, r),
        None => (false, inner),
    };
    let end = rest.find(|c: char| c.is_whitespace() || c == '/').unwrap_or(rest.len());
    let name = &rest[..end];
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric()) {
        return None;
    }
    Some(Tag {
        name,
        closing,
        self_closing: inner.trim_end().ends_with('/'),
    })
}

/// Decodes the HTML character references found in post bodies. Unknown
/// named references are kept verbatim.
pub fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let semi = rest[..rest.len().min(12)].find(';');
        let decoded = semi.and_then(|semi| {
            let name = &rest[1..semi];
            let ch = match name {
                "lt" => Some('<'),
                "gt" => Some('>'),
                "amp" => Some('&'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                _ => {
                    if let Some(hex) = name.strip_prefix("#x").or_else(|| name.strip_prefix("#X")) {
                        u32::from_str_radix(hex, 16).ok().and_then(char::from_u32)
                    } else if let Some(dec) = name.strip_prefix('#') {
                        dec.parse::<u32>().ok().and_then(char::from_u32)
                    } else {
                        None
                    }
                }
            };
            ch.map(|c| (c, semi + 1))
        });
        match decoded {
            Some((c, len)) => {
                out.push(c);
                rest = &rest[len..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Collapses whitespace runs into single spaces and trims the ends.
pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn split_body(markup: &str) -> BodyParts {
    let mut text_raw = String::with_capacity(markup.len());
    let mut code_blocks = Vec::new();
    let mut pre_depth = 0usize;
    let mut code_buf: Option<String> = None;

    let mut rest = markup;
    while !rest.is_empty() {
        let Some(lt) = rest.find('<') else {
            push_text(&mut code_buf, &mut text_raw, rest);
            break;
        };
        push_text(&mut code_buf, &mut text_raw, &rest[..lt]);
        rest = &rest[lt..];
        let Some(gt) = rest.find('>') else {
            // Stray '<' with no closing bracket: literal text.
            push_text(&mut code_buf, &mut text_raw, rest);
            break;
        };
        let inner = &rest[1..gt];
        let tag = parse_tag(inner);
        rest = &rest[gt + 1..];
        let Some(tag) = tag else {
            // Comments, doctypes, or a literal '<' followed later by '>'.
            if inner.starts_with('!') || inner.starts_with('?') {
                continue;
            }
            push_text(&mut code_buf, &mut text_raw, "<");
            push_text(&mut code_buf, &mut text_raw, inner);
            push_text(&mut code_buf, &mut text_raw, ">");
            continue;
        };
        let name = tag.name.to_ascii_lowercase();
        match (name.as_str(), tag.closing) {
            ("pre", false) if !tag.self_closing => pre_depth += 1,
            ("pre", true) => pre_depth = pre_depth.saturating_sub(1),
            ("code", false) if pre_depth > 0 && code_buf.is_none() && !tag.self_closing => {
                code_buf = Some(String::new());
                continue;
            }
            ("code", true) if code_buf.is_some() => {
                if let Some(block) = code_buf.take() {
                    code_blocks.push(decode_entities(&block));
                }
                continue;
            }
            _ => {}
        }
        if let Some(buf) = code_buf.as_mut() {
            if name == "br" {
                buf.push('\n');
            }
        } else if !INLINE_TAGS.contains(&name.as_str()) {
            text_raw.push(' ');
        }
    }
    if let Some(block) = code_buf.take() {
        code_blocks.push(decode_entities(&block));
    }

    BodyParts {
        text: collapse_whitespace(&decode_entities(&text_raw)),
        code_blocks,
    }
}

fn push_text(code_buf: &mut Option<String>, text: &mut String, s: &str) {
    match code_buf {
        Some(buf) => buf.push_str(s),
        None => text.push_str(s),
    }
}
