//! Stand-alone N-Triples line validator.

/// Parses N-Triples text into raw `[subject, predicate, object]` term
/// strings exactly as written. Fails on the first malformed line.
pub fn parse(text: &str) -> Result<Vec<[String; 3]>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fail = |msg: &str| format!("line {}: {msg}: {line}", n + 1);
        let mut rest = trimmed;
        let mut terms = Vec::new();
        for position in 0..3 {
            rest = rest.trim_start_matches([' ', '\t']);
            let len = match (position, rest.chars().next()) {
                (_, Some('<')) => iri_len(rest).ok_or_else(|| fail("bad IRI"))?,
                (0 | 2, Some('_')) => blank_len(rest).ok_or_else(|| fail("bad blank node"))?,
                (2, Some('"')) => literal_len(rest).ok_or_else(|| fail("bad literal"))?,
                _ => return Err(fail("unexpected term")),
            };
            terms.push(rest[..len].to_string());
            rest = &rest[len..];
            if !rest.starts_with([' ', '\t']) && position < 2 {
                return Err(fail("missing separator"));
            }
        }
        if rest.trim_start_matches([' ', '\t']) != "." {
            return Err(fail("missing final dot"));
        }
        out.push([terms[0].clone(), terms[1].clone(), terms[2].clone()]);
    }
    Ok(out)
}

fn uchar_len(s: &str) -> Option<usize> {
    let digits = match s.as_bytes().get(1)? {
        b'u' => 4,
        b'U' => 8,
        _ => return None,
    };
    let hex = s.get(2..2 + digits)?;
    hex.bytes().all(|b| b.is_ascii_hexdigit()).then_some(2 + digits)
}

fn iri_len(s: &str) -> Option<usize> {
    let mut i = 1;
    let body_start = i;
    loop {
        let c = s[i..].chars().next()?;
        match c {
            '>' => break,
            '\\' => i += uchar_len(&s[i..])?,
            c if c <= ' ' || "<\"{}|^`".contains(c) => return None,
            c => i += c.len_utf8(),
        }
    }
    let body = &s[body_start..i];
    let scheme_end = body.find(':')?;
    let scheme = &body[..scheme_end];
    let valid_scheme = scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && scheme.chars().all(|c| c.is_ascii_alphanumeric() || "+-.".contains(c));
    valid_scheme.then_some(i + 1)
}

fn blank_len(s: &str) -> Option<usize> {
    let label = s.strip_prefix("_:")?;
    let len = label
        .char_indices()
        .find(|(_, c)| !(c.is_alphanumeric() || *c == '_' || *c == '-' || *c == '.'))
        .map_or(label.len(), |(i, _)| i);
    (len > 0 && !label[..len].ends_with('.')).then_some(2 + len)
}

fn literal_len(s: &str) -> Option<usize> {
    let mut i = 1;
    loop {
        let c = s[i..].chars().next()?;
        match c {
            '"' => break,
            '\\' => match s.as_bytes().get(i + 1)? {
                b't' | b'b' | b'n' | b'r' | b'f' | b'"' | b'\'' | b'\\' => i += 2,
                _ => i += uchar_len(&s[i..])?,
            },
            '\n' | '\r' => return None,
            c => i += c.len_utf8(),
        }
    }
    i += 1;
    let rest = &s[i..];
    if let Some(dt) = rest.strip_prefix("^^") {
        return Some(i + 2 + iri_len(dt)?);
    }
    if let Some(tag) = rest.strip_prefix('@') {
        let len = tag
            .char_indices()
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '-'))
            .map_or(tag.len(), |(j, _)| j);
        let ok = len > 0 && tag[..len].split('-').all(|p| !p.is_empty())
            && tag.chars().next().is_some_and(|c| c.is_ascii_alphabetic());
        return ok.then_some(i + 1 + len);
    }
    Some(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_and_rejects() {
        let ok = "<http://a/b> <http://a/p> \"x\\\"y\"@en-GB .\n_:b1 <http://a/p> \"5\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n";
        assert_eq!(parse(ok).unwrap().len(), 2);
        for bad in [
            "<a/b> <http://a/p> <http://a/o> .",
            "<http://a/b> <http://a/p> \"x\" ",
            "<http://a/b> \"p\" <http://a/o> .",
            "<http://a/b c> <http://a/p> <http://a/o> .",
            "<http://a/b> <http://a/p> \"bad \\q\" .",
        ] {
            assert!(parse(bad).is_err(), "{bad}");
        }
    }
}
