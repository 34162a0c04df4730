//! Streaming reader for the row-per-post XML dump format.

use std::io::BufRead;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::RawPost;

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error("row at byte {offset}: missing attribute `{attribute}`")]
    MissingAttribute { offset: u64, attribute: &'static str },
    #[error("row at byte {offset}: invalid attribute `{attribute}`: {reason}")]
    InvalidAttribute {
        offset: u64,
        attribute: String,
        reason: String,
    },
    #[error("truncated dump: stream ended at byte {offset} with {open} unclosed element(s)")]
    Truncated { offset: u64, open: usize },
    #[error("malformed dump at byte {offset}: {message}")]
    Syntax { offset: u64, message: String },
    #[error("i/o error reading dump: {0}")]
    Io(#[from] std::io::Error),
}

impl DumpError {
    /// Per-row problems can be skipped; everything else ends the stream.
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self,
            DumpError::MissingAttribute { .. } | DumpError::InvalidAttribute { .. }
        )
    }

    pub fn offset(&self) -> Option<u64> {
        match self {
            DumpError::MissingAttribute { offset, .. }
            | DumpError::InvalidAttribute { offset, .. }
            | DumpError::Truncated { offset, .. }
            | DumpError::Syntax { offset, .. } => Some(*offset),
            DumpError::Io(_) => None,
        }
    }
}

/// Lazily yields one [`RawPost`] per question row. Answer and other
/// non-question rows are skipped. After a fatal error the iterator is fused.
pub struct PostStream<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    depth: usize,
    done: bool,
}

pub fn parse_posts_stream<R: BufRead>(source: R) -> PostStream<R> {
    let mut reader = Reader::from_reader(source);
    reader.config_mut().check_end_names = true;
    PostStream {
        reader,
        buf: Vec::with_capacity(8 * 1024),
        depth: 0,
        done: false,
    }
}

impl<R: BufRead> Iterator for PostStream<R> {
    type Item = Result<RawPost, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.buf.clear();
            let offset = self.reader.buffer_position();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(ev) => ev,
                Err(e) => {
                    self.done = true;
                    let offset = self.reader.error_position();
                    return Some(Err(match e {
                        quick_xml::Error::Io(io) => DumpError::Io(std::io::Error::new(io.kind(), io.to_string())),
                        quick_xml::Error::Syntax(s) if is_eof_syntax(&s) => DumpError::Truncated {
                            offset,
                            open: self.depth + 1,
                        },
                        other => DumpError::Syntax {
                            offset,
                            message: other.to_string(),
                        },
                    }));
                }
            };
            match event {
                Event::Start(e) => {
                    self.depth += 1;
                    if e.name().as_ref() == b"row" {
                        if let Some(item) = row_to_post(&e, offset) {
                            return Some(item);
                        }
                    }
                }
                Event::End(_) => self.depth = self.depth.saturating_sub(1),
                Event::Empty(e) => {
                    if e.name().as_ref() == b"row" {
                        if let Some(item) = row_to_post(&e, offset) {
                            return Some(item);
                        }
                    }
                }
                Event::Eof => {
                    self.done = true;
                    if self.depth > 0 {
                        return Some(Err(DumpError::Truncated {
                            offset: self.reader.buffer_position(),
                            open: self.depth,
                        }));
                    }
                    return None;
                }
                _ => {}
            }
        }
    }
}

fn is_eof_syntax(e: &quick_xml::errors::SyntaxError) -> bool {
    use quick_xml::errors::SyntaxError::*;
    matches!(
        e,
        UnclosedPIOrXmlDecl | UnclosedComment | UnclosedDoctype | UnclosedCData | UnclosedTag
    )
}

#[derive(Default)]
struct RowAttrs {
    id: Option<String>,
    post_type: Option<String>,
    title: Option<String>,
    body: Option<String>,
    tags: Option<String>,
}

/// Returns `None` for rows that are well-formed but not questions.
fn row_to_post(e: &BytesStart<'_>, offset: u64) -> Option<Result<RawPost, DumpError>> {
    let mut attrs = RowAttrs::default();
    for attr in e.attributes() {
        let attr = match attr {
            Ok(a) => a,
            Err(err) => {
                return Some(Err(DumpError::InvalidAttribute {
                    offset,
                    attribute: "<row>".into(),
                    reason: err.to_string(),
                }))
            }
        };
        let slot = match attr.key.as_ref() {
            b"Id" => &mut attrs.id,
            b"PostTypeId" => &mut attrs.post_type,
            b"Title" => &mut attrs.title,
            b"Body" => &mut attrs.body,
            b"Tags" => &mut attrs.tags,
            _ => continue,
        };
        match attr.unescape_value() {
            Ok(v) => *slot = Some(v.into_owned()),
            Err(err) => {
                return Some(Err(DumpError::InvalidAttribute {
                    offset,
                    attribute: String::from_utf8_lossy(attr.key.as_ref()).into_owned(),
                    reason: err.to_string(),
                }))
            }
        }
    }

    let post_type = match attrs.post_type.take() {
        None => {
            return Some(Err(DumpError::MissingAttribute {
                offset,
                attribute: "PostTypeId",
            }))
        }
        Some(v) => match v.trim().parse::<u8>() {
            Ok(t) => t,
            Err(err) => {
                return Some(Err(DumpError::InvalidAttribute {
                    offset,
                    attribute: "PostTypeId".into(),
                    reason: err.to_string(),
                }))
            }
        },
    };
    if post_type != 1 {
        return None;
    }
    Some(build_question_row(attrs, post_type, offset))
}

fn build_question_row(attrs: RowAttrs, post_type: u8, offset: u64) -> Result<RawPost, DumpError> {
    let missing = move |attribute| DumpError::MissingAttribute { offset, attribute };
    let id_raw = attrs.id.ok_or_else(|| missing("Id"))?;
    let id = id_raw
        .trim()
        .parse::<u64>()
        .map_err(|err| DumpError::InvalidAttribute {
            offset,
            attribute: "Id".into(),
            reason: err.to_string(),
        })?;
    let title = attrs.title.ok_or_else(|| missing("Title"))?;
    let body_markup = attrs.body.ok_or_else(|| missing("Body"))?;
    let tags = attrs.tags.ok_or_else(|| missing("Tags"))?;
    Ok(RawPost {
        id,
        post_type,
        title,
        body_markup,
        tags: parse_tags(&tags),
    })
}

/// Parses `<tag1><tag2>` into lowercase tags, dropping duplicates.
pub fn parse_tags(raw: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let pieces = raw.split(['<', '>']).map(str::trim).filter(|t| !t.is_empty());
    for piece in pieces {
        let tag = piece.to_lowercase();
        if !out.contains(&tag) {
            out.push(tag);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect(xml: &str) -> Vec<Result<RawPost, DumpError>> {
        parse_posts_stream(xml.as_bytes()).collect()
    }

    #[test]
    fn single_question_row() {
        let xml = r#"<?xml version="1.0" encoding="utf-8"?>
<posts>
  <row Id="4" PostTypeId="1" Title="Fast &amp; loose" Body="&lt;p&gt;hi&lt;/p&gt;" Tags="&lt;java&gt;" />
</posts>"#;
        let out = collect(xml);
        assert_eq!(out.len(), 1);
        let post = out.into_iter().next().unwrap().unwrap();
        assert_eq!(post.id, 4);
        assert_eq!(post.title, "Fast & loose");
        assert_eq!(post.body_markup, "<p>hi</p>");
        assert_eq!(post.tags, vec!["java"]);
    }

    #[test]
    fn answer_rows_are_skipped() {
        let xml = r#"<posts><row Id="5" PostTypeId="2" Body="x" /></posts>"#;
        assert!(collect(xml).is_empty());
    }

    #[test]
    fn missing_body_is_a_recoverable_row_error() {
        let xml = r#"<posts>
<row Id="1" PostTypeId="1" Title="t" Tags="&lt;c&gt;" />
<row Id="2" PostTypeId="1" Title="t" Body="b" Tags="&lt;c&gt;" />
</posts>"#;
        let out = collect(xml);
        assert_eq!(out.len(), 2);
        match &out[0] {
            Err(e @ DumpError::MissingAttribute { attribute, offset }) => {
                assert_eq!(*attribute, "Body");
                assert!(e.is_recoverable());
                assert_eq!(*offset, 8);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(out[1].as_ref().unwrap().id, 2);
    }

    #[test]
    fn truncated_stream_is_fatal() {
        let xml = r#"<posts><row Id="1" PostTypeId="1" Title="t" Body="b" Tags="&lt;c&gt;" />"#;
        let out = collect(xml);
        assert!(out[0].is_ok());
        let err = out.last().unwrap().as_ref().unwrap_err();
        assert!(matches!(err, DumpError::Truncated { .. }), "{err:?}");
        assert!(!err.is_recoverable());

        let cut = r#"<posts><row Id="1" PostTypeId="1" Tit"#;
        let out = collect(cut);
        assert_eq!(out.len(), 1);
        assert!(!out[0].as_ref().unwrap_err().is_recoverable());
    }

    #[test]
    fn tags_are_lowercased_and_deduplicated() {
        assert_eq!(parse_tags("<Java><java-8><java>"), vec!["java", "java-8"]);
        assert!(parse_tags("").is_empty());
    }
}
