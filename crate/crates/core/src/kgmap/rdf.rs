use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use super::{KgError, Result};

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    Blank(String),
    Literal {
        lexical: String,
        datatype: String,
        language: Option<String>,
    },
}

impl Term {
    pub fn iri(iri: impl Into<String>) -> Self {
        Term::Iri(iri.into())
    }

    pub fn string(lexical: impl Into<String>) -> Self {
        Self::typed(lexical, XSD_STRING)
    }

    pub fn typed(lexical: impl Into<String>, datatype: impl Into<String>) -> Self {
        Term::Literal {
            lexical: lexical.into(),
            datatype: datatype.into(),
            language: None,
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Term::Literal { .. })
    }

    /// IRI text, blank node label or literal lexical form.
    pub fn value(&self) -> &str {
        match self {
            Term::Iri(s) | Term::Blank(s) => s,
            Term::Literal { lexical, .. } => lexical,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(iri) => write_iri(f, iri),
            Term::Blank(label) => write!(f, "_:{label}"),
            Term::Literal {
                lexical,
                datatype,
                language,
            } => {
                f.write_char('"')?;
                write_escaped(f, lexical)?;
                f.write_char('"')?;
                match language {
                    Some(lang) => write!(f, "@{lang}"),
                    None if datatype == XSD_STRING => Ok(()),
                    None => {
                        f.write_str("^^")?;
                        write_iri(f, datatype)
                    }
                }
            }
        }
    }
}

fn write_iri(f: &mut impl fmt::Write, iri: &str) -> fmt::Result {
    f.write_char('<')?;
    for c in iri.chars() {
        if c <= ' ' || matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') {
            write!(f, "\\u{:04X}", c as u32)?;
        } else {
            f.write_char(c)?;
        }
    }
    f.write_char('>')
}

fn write_escaped(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\r' => f.write_str("\\r")?,
            '\t' => f.write_str("\\t")?,
            '\u{8}' => f.write_str("\\b")?,
            '\u{c}' => f.write_str("\\f")?,
            c if c < ' ' || c == '\u{7f}' => write!(f, "\\u{:04X}", c as u32)?,
            c => f.write_char(c)?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: Term,
    pub predicate: Term,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: Term, object: Term) -> Self {
        Self {
            subject,
            predicate,
            object,
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.subject, self.predicate, self.object)
    }
}

pub type TripleSet = BTreeSet<Triple>;

/// Canonical N-Triples: one statement per line, single spaces between
/// terms, `xsd:string` literals written without datatype, lines sorted by
/// byte value.
pub fn serialize_ntriples<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> String {
    let mut lines: Vec<String> = triples.into_iter().map(Triple::to_string).collect();
    lines.sort_unstable();
    lines.dedup();
    let mut out = String::with_capacity(lines.iter().map(|l| l.len() + 1).sum());
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

struct Cursor<'a> {
    line: usize,
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, message: impl Into<String>) -> KgError {
        KgError::NTriples {
            line: self.line,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.bump() {
            Some(x) if x == c => Ok(()),
            other => Err(self.err(format!("expected {c:?}, found {other:?}"))),
        }
    }

    fn uchar(&mut self, digits: usize) -> Result<char> {
        let hex = self.rest().get(..digits).ok_or_else(|| self.err("truncated escape"))?;
        let code = u32::from_str_radix(hex, 16).map_err(|_| self.err("bad hex escape"))?;
        self.pos += digits;
        char::from_u32(code).ok_or_else(|| self.err("escape is not a scalar value"))
    }

    fn iri(&mut self) -> Result<String> {
        self.expect('<')?;
        let mut out = String::new();
        loop {
            match self.bump() {
                Some('>') => break,
                Some('\\') => match self.bump() {
                    Some('u') => out.push(self.uchar(4)?),
                    Some('U') => out.push(self.uchar(8)?),
                    _ => return Err(self.err("bad IRI escape")),
                },
                Some(c) if c <= ' ' || matches!(c, '<' | '"' | '{' | '}' | '|' | '^' | '`') => {
                    return Err(self.err(format!("character {c:?} not allowed in IRI")))
                }
                Some(c) => out.push(c),
                None => return Err(self.err("unterminated IRI")),
            }
        }
        let scheme_end = out.find(':').ok_or_else(|| self.err("relative IRI"))?;
        let scheme = &out[..scheme_end];
        let valid_scheme = scheme.starts_with(|c: char| c.is_ascii_alphabetic())
            && scheme.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
        if !valid_scheme {
            return Err(self.err("relative IRI"));
        }
        Ok(out)
    }

    fn blank(&mut self) -> Result<String> {
        self.expect('_')?;
        self.expect(':')?;
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || matches!(c, '_' | '-' | '.')) {
            self.pos += self.peek().map_or(0, char::len_utf8);
        }
        let label = self.text[start..self.pos].trim_end_matches('.');
        self.pos = start + label.len();
        if label.is_empty() {
            return Err(self.err("empty blank node label"));
        }
        Ok(label.to_string())
    }

    fn literal(&mut self) -> Result<Term> {
        self.expect('"')?;
        let mut lexical = String::new();
        loop {
            match self.bump() {
                Some('"') => break,
                Some('\\') => lexical.push(match self.bump() {
                    Some('t') => '\t',
                    Some('b') => '\u{8}',
                    Some('n') => '\n',
                    Some('r') => '\r',
                    Some('f') => '\u{c}',
                    Some('"') => '"',
                    Some('\'') => '\'',
                    Some('\\') => '\\',
                    Some('u') => self.uchar(4)?,
                    Some('U') => self.uchar(8)?,
                    _ => return Err(self.err("bad string escape")),
                }),
                Some('\n' | '\r') | None => return Err(self.err("unterminated literal")),
                Some(c) => lexical.push(c),
            }
        }
        match self.peek() {
            Some('^') => {
                self.expect('^')?;
                self.expect('^')?;
                Ok(Term::typed(lexical, self.iri()?))
            }
            Some('@') => {
                self.bump();
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '-') {
                    self.pos += 1;
                }
                let lang = &self.text[start..self.pos];
                if lang.is_empty() || !lang.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    return Err(self.err("bad language tag"));
                }
                Ok(Term::Literal {
                    lexical,
                    datatype: RDF_LANG_STRING.to_string(),
                    language: Some(lang.to_string()),
                })
            }
            _ => Ok(Term::string(lexical)),
        }
    }
}

/// Parses N-Triples text. Comments and blank lines are skipped.
pub fn parse_ntriples(text: &str) -> Result<Vec<Triple>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut c = Cursor {
            line: i + 1,
            text: line,
            pos: 0,
        };
        c.skip_ws();
        if matches!(c.peek(), None | Some('#')) {
            continue;
        }
        let subject = match c.peek() {
            Some('<') => Term::Iri(c.iri()?),
            Some('_') => Term::Blank(c.blank()?),
            _ => return Err(c.err("subject must be an IRI or blank node")),
        };
        c.skip_ws();
        let predicate = Term::Iri(c.iri()?);
        c.skip_ws();
        let object = match c.peek() {
            Some('<') => Term::Iri(c.iri()?),
            Some('_') => Term::Blank(c.blank()?),
            Some('"') => c.literal()?,
            _ => return Err(c.err("object must be an IRI, blank node or literal")),
        };
        c.skip_ws();
        c.expect('.')?;
        c.skip_ws();
        if !matches!(c.peek(), None | Some('#')) {
            return Err(c.err("trailing content after statement"));
        }
        out.push(Triple::new(subject, predicate, object));
    }
    Ok(out)
}

/// Turtle rendering grouped by subject, abbreviating IRIs with `prefixes`
/// where the local part is a plain name.
pub fn serialize_turtle(triples: &TripleSet, prefixes: &BTreeMap<String, String>) -> String {
    let abbreviate = |term: &Term| -> String {
        if let Term::Iri(iri) = term {
            if iri == RDF_TYPE {
                return "a".into();
            }
            let best = prefixes
                .iter()
                .filter(|(_, ns)| iri.starts_with(ns.as_str()))
                .max_by_key(|(_, ns)| ns.len());
            if let Some((p, ns)) = best {
                let local = &iri[ns.len()..];
                let plain = !local.is_empty()
                    && local.starts_with(|c: char| c.is_ascii_alphabetic())
                    && local.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
                if plain {
                    return format!("{p}:{local}");
                }
            }
        }
        term.to_string()
    };
    let mut out = String::new();
    for (p, ns) in prefixes {
        let _ = writeln!(out, "@prefix {p}: <{ns}> .");
    }
    let mut current: Option<&Term> = None;
    for t in triples {
        if current == Some(&t.subject) {
            out.push_str(" ;\n    ");
        } else {
            if current.is_some() {
                out.push_str(" .\n");
            }
            out.push('\n');
            out.push_str(&abbreviate(&t.subject));
            out.push(' ');
            current = Some(&t.subject);
        }
        let predicate = if matches!(&t.predicate, Term::Iri(i) if i == RDF_TYPE) {
            "a".to_string()
        } else {
            abbreviate(&t.predicate)
        };
        let object = if t.object.is_literal() {
            t.object.to_string()
        } else {
            abbreviate(&t.object)
        };
        let _ = write!(out, "{predicate} {object}");
    }
    if current.is_some() {
        out.push_str(" .\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str, p: &str, o: Term) -> Triple {
        Triple::new(Term::iri(s), Term::iri(p), o)
    }

    #[test]
    fn literal_escaping() {
        let triple = t("http://x/s", "http://x/p", Term::string("a\"b\\c\nd\u{1}"));
        assert_eq!(
            triple.to_string(),
            r#"<http://x/s> <http://x/p> "a\"b\\c\nd\u0001" ."#
        );
        let back = parse_ntriples(&triple.to_string()).unwrap();
        assert_eq!(back, vec![triple]);
    }

    #[test]
    fn empty_set_is_empty_file() {
        assert_eq!(serialize_ntriples(&TripleSet::new()), "");
    }

    #[test]
    fn canonical_lines_are_sorted() {
        let set: TripleSet = [
            t("http://x/b", "http://x/p", Term::typed("1", "http://www.w3.org/2001/XMLSchema#integer")),
            t("http://x/a", "http://x/p", Term::iri("http://x/o")),
        ]
        .into_iter()
        .collect();
        let text = serialize_ntriples(&set);
        assert_eq!(
            text,
            "<http://x/a> <http://x/p> <http://x/o> .\n\
             <http://x/b> <http://x/p> \"1\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n"
        );
        let reparsed: TripleSet = parse_ntriples(&text).unwrap().into_iter().collect();
        assert_eq!(serialize_ntriples(&reparsed), text);
    }

    #[test]
    fn parser_rejects_bad_lines() {
        for bad in [
            "<http://x/s> <http://x/p> \"open .",
            "<rel> <http://x/p> <http://x/o> .",
            "<http://x/s> <http://x/p> <http://x/o>",
            "<http://x/s> \"p\" <http://x/o> .",
            "<http://x/s> <http://x/p> <http://x/o> . extra",
        ] {
            assert!(parse_ntriples(bad).is_err(), "{bad}");
        }
        let ok = "# comment\n\n_:b1 <http://x/p> \"hi\"@en-GB .\n";
        let parsed = parse_ntriples(ok).unwrap();
        assert_eq!(parsed[0].subject, Term::Blank("b1".into()));
        assert_eq!(parsed[0].to_string(), "_:b1 <http://x/p> \"hi\"@en-GB .");
    }

    #[test]
    fn turtle_groups_subjects() {
        let set: TripleSet = [
            t("http://x/a", RDF_TYPE, Term::iri("http://x/C")),
            t("http://x/a", "http://x/p", Term::string("v")),
        ]
        .into_iter()
        .collect();
        let prefixes = BTreeMap::from([("x".to_string(), "http://x/".to_string())]);
        assert_eq!(
            serialize_turtle(&set, &prefixes),
            "@prefix x: <http://x/> .\n\nx:a a x:C ;\n    x:p \"v\" .\n"
        );
    }
}
