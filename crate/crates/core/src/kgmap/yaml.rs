//! The YAML subset used by mapping documents.
//!
//! Supported: block mappings, block sequences (`- item`), single-line flow
//! sequences (`[a, b]`, nestable), plain, single- and double-quoted
//! scalars, and `#` comments. Braces are ordinary characters so that
//! `{column}` templates need no quoting. Anchors, tags, multi-line scalars,
//! flow mappings and mappings inside sequences are not supported.

use super::{KgError, Result};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    Scalar(String),
    Seq(Vec<Located>),
    Map(Vec<(String, Located)>),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Located {
    pub line: usize,
    pub node: Node,
}

impl Located {
    pub fn scalar(&self) -> Result<&str> {
        match &self.node {
            Node::Scalar(s) => Ok(s),
            _ => Err(syntax(self.line, "expected a scalar")),
        }
    }
}

pub(crate) fn syntax(line: usize, message: impl Into<String>) -> KgError {
    KgError::Syntax {
        line,
        message: message.into(),
    }
}

struct Line<'a> {
    number: usize,
    indent: usize,
    content: &'a str,
}

/// Drops a trailing comment that starts outside quotes.
fn strip_comment(line: &str) -> &str {
    let mut quote: Option<char> = None;
    let mut prev = ' ';
    for (i, c) in line.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if c == '"' || c == '\'' => quote = Some(c),
            None if c == '#' && prev.is_whitespace() => return &line[..i],
            None => {}
        }
        prev = c;
    }
    line
}

pub(crate) fn parse(text: &str) -> Result<Located> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let body = raw.trim_start_matches(' ');
        if body.starts_with('\t') {
            return Err(syntax(number, "tabs are not allowed for indentation"));
        }
        let content = strip_comment(body).trim_end();
        if content.is_empty() || content == "---" {
            continue;
        }
        lines.push(Line {
            number,
            indent: raw.len() - body.len(),
            content,
        });
    }
    if lines.is_empty() {
        return Ok(Located {
            line: 1,
            node: Node::Map(Vec::new()),
        });
    }
    let mut pos = 0;
    let indent = lines[0].indent;
    let root = block(&lines, &mut pos, indent)?;
    if let Some(extra) = lines.get(pos) {
        return Err(syntax(extra.number, "unexpected indentation"));
    }
    Ok(root)
}

fn is_seq_item(content: &str) -> bool {
    content == "-" || content.starts_with("- ")
}

fn block(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Located> {
    let first = &lines[*pos];
    if is_seq_item(first.content) {
        sequence(lines, pos, indent)
    } else {
        mapping(lines, pos, indent)
    }
}

fn sequence(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Located> {
    let line = lines[*pos].number;
    let mut items = Vec::new();
    while let Some(l) = lines.get(*pos) {
        if l.indent != indent || !is_seq_item(l.content) {
            break;
        }
        let rest = l.content[1..].trim_start();
        *pos += 1;
        if rest.is_empty() {
            match lines.get(*pos) {
                Some(next) if next.indent > indent => {
                    let ind = next.indent;
                    items.push(block(lines, pos, ind)?);
                }
                _ => items.push(Located {
                    line: l.number,
                    node: Node::Scalar(String::new()),
                }),
            }
        } else {
            if split_key(rest).is_some() {
                return Err(syntax(l.number, "mappings inside sequences are not supported"));
            }
            items.push(inline(rest, l.number)?);
        }
    }
    Ok(Located {
        line,
        node: Node::Seq(items),
    })
}

/// Splits `key: value` at the first `: ` (or trailing `:`) outside quotes.
fn split_key(content: &str) -> Option<(&str, &str)> {
    if content.starts_with('[') {
        return None;
    }
    let mut quote: Option<char> = None;
    let bytes = content.as_bytes();
    for (i, c) in content.char_indices() {
        match quote {
            Some(q) if c == q => quote = None,
            Some(_) => {}
            None if i == 0 && (c == '"' || c == '\'') => quote = Some(c),
            None if c == ':' && (i + 1 == bytes.len() || bytes[i + 1] == b' ') => {
                return Some((content[..i].trim_end(), content[i + 1..].trim_start()));
            }
            None => {}
        }
    }
    None
}

fn mapping(lines: &[Line], pos: &mut usize, indent: usize) -> Result<Located> {
    let line = lines[*pos].number;
    let mut entries: Vec<(String, Located)> = Vec::new();
    while let Some(l) = lines.get(*pos) {
        if l.indent < indent {
            break;
        }
        if l.indent > indent {
            return Err(syntax(l.number, "unexpected indentation"));
        }
        if is_seq_item(l.content) {
            return Err(syntax(l.number, "sequence item where a mapping key was expected"));
        }
        let (raw_key, rest) =
            split_key(l.content).ok_or_else(|| syntax(l.number, "expected `key: value`"))?;
        let key = match inline(raw_key, l.number)?.node {
            Node::Scalar(k) if !k.is_empty() => k,
            _ => return Err(syntax(l.number, "mapping keys must be non-empty scalars")),
        };
        if entries.iter().any(|(k, _)| *k == key) {
            return Err(syntax(l.number, format!("duplicate key {key:?}")));
        }
        *pos += 1;
        let value = if rest.is_empty() {
            match lines.get(*pos) {
                Some(next) if next.indent > indent => {
                    let ind = next.indent;
                    block(lines, pos, ind)?
                }
                Some(next) if next.indent == indent && is_seq_item(next.content) => {
                    sequence(lines, pos, indent)?
                }
                _ => Located {
                    line: l.number,
                    node: Node::Scalar(String::new()),
                },
            }
        } else {
            inline(rest, l.number)?
        };
        entries.push((key, value));
    }
    Ok(Located {
        line,
        node: Node::Map(entries),
    })
}

fn inline(text: &str, line: usize) -> Result<Located> {
    let mut chars = Scanner { text, pos: 0, line };
    let node = chars.value(false)?;
    chars.skip_spaces();
    if chars.pos != text.len() {
        return Err(syntax(line, format!("unexpected text {:?}", &text[chars.pos..])));
    }
    Ok(Located { line, node })
}

struct Scanner<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl Scanner<'_> {
    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn skip_spaces(&mut self) {
        while self.peek() == Some(' ') {
            self.pos += 1;
        }
    }

    fn value(&mut self, in_flow: bool) -> Result<Node> {
        self.skip_spaces();
        match self.peek() {
            Some('[') => self.flow(),
            Some('"') => self.double_quoted().map(Node::Scalar),
            Some('\'') => self.single_quoted().map(Node::Scalar),
            _ => Ok(Node::Scalar(self.plain(in_flow))),
        }
    }

    fn plain(&mut self, in_flow: bool) -> String {
        let start = self.pos;
        if in_flow {
            // Braces nest so that `{a, b}` stays one scalar.
            let mut depth = 0usize;
            while let Some(c) = self.peek() {
                match c {
                    '{' => depth += 1,
                    '}' => depth = depth.saturating_sub(1),
                    ',' | ']' if depth == 0 => break,
                    _ => {}
                }
                self.pos += c.len_utf8();
            }
        } else {
            self.pos = self.text.len();
        }
        self.text[start..self.pos].trim().to_string()
    }

    fn flow(&mut self) -> Result<Node> {
        let line = self.line;
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            self.skip_spaces();
            if self.peek() == Some(']') {
                self.pos += 1;
                return Ok(Node::Seq(items));
            }
            let node = self.value(true)?;
            items.push(Located { line, node });
            self.skip_spaces();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(']') => {}
                _ => return Err(syntax(line, "unterminated flow sequence")),
            }
        }
    }

    fn double_quoted(&mut self) -> Result<String> {
        self.pos += 1;
        let mut out = String::new();
        loop {
            let c = self.peek().ok_or_else(|| syntax(self.line, "unterminated string"))?;
            self.pos += c.len_utf8();
            match c {
                '"' => return Ok(out),
                '\\' => {
                    let e = self.peek().ok_or_else(|| syntax(self.line, "unterminated string"))?;
                    self.pos += e.len_utf8();
                    out.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        '"' => '"',
                        '\\' => '\\',
                        '/' => '/',
                        _ => return Err(syntax(self.line, format!("unsupported escape \\{e}"))),
                    });
                }
                c => out.push(c),
            }
        }
    }

    fn single_quoted(&mut self) -> Result<String> {
        self.pos += 1;
        let mut out = String::new();
        loop {
            let c = self.peek().ok_or_else(|| syntax(self.line, "unterminated string"))?;
            self.pos += c.len_utf8();
            if c == '\'' {
                if self.peek() == Some('\'') {
                    self.pos += 1;
                    out.push('\'');
                } else {
                    return Ok(out);
                }
            } else {
                out.push(c);
            }
        }
    }
}
