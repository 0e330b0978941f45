use std::collections::{BTreeMap, BTreeSet};

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use rayon::prelude::*;

use super::rdf::{Term, Triple, TripleSet, RDF_TYPE, XSD_STRING};
use super::yaml::{self, syntax, Located, Node};
use super::{builtin_prefixes, expand_name, KgError, Result, Tables};

/// Everything outside the RFC 3986 unreserved set is escaped in slot values.
const SLOT_ESCAPE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'.').remove(b'_').remove(b'~');

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TemplatePart {
    Text(String),
    Column(String),
}

/// Text with `{column}` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub parts: Vec<TemplatePart>,
}

impl Template {
    fn parse(text: &str) -> std::result::Result<Self, String> {
        let mut parts = Vec::new();
        let mut rest = text;
        while let Some(open) = rest.find(['{', '}']) {
            if rest[open..].starts_with('}') {
                return Err("unmatched '}'".into());
            }
            if open > 0 {
                parts.push(TemplatePart::Text(rest[..open].to_string()));
            }
            let close = rest[open..].find('}').ok_or("unclosed '{'")? + open;
            let column = &rest[open + 1..close];
            if column.is_empty() || column.contains('{') {
                return Err(format!("bad slot {{{column}}}"));
            }
            parts.push(TemplatePart::Column(column.to_string()));
            rest = &rest[close + 1..];
        }
        if !rest.is_empty() {
            parts.push(TemplatePart::Text(rest.to_string()));
        }
        Ok(Self { parts })
    }

    pub fn columns(&self) -> impl Iterator<Item = &str> {
        self.parts.iter().filter_map(|p| match p {
            TemplatePart::Column(c) => Some(c.as_str()),
            TemplatePart::Text(_) => None,
        })
    }

    pub fn is_constant(&self) -> bool {
        self.columns().next().is_none()
    }

    /// Fills the slots; `None` when any referenced cell is empty.
    fn render(&self, row: &[String], index: &BTreeMap<&str, usize>, encode: bool) -> Option<String> {
        let mut out = String::new();
        for part in &self.parts {
            match part {
                TemplatePart::Text(t) => out.push_str(t),
                TemplatePart::Column(c) => {
                    let value = &row[index[c.as_str()]];
                    if value.is_empty() {
                        return None;
                    }
                    if encode {
                        out.extend(utf8_percent_encode(value, SLOT_ESCAPE));
                    } else {
                        out.push_str(value);
                    }
                }
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectSpec {
    Iri(Template),
    Literal { template: Template, datatype: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateObject {
    pub predicate: String,
    pub object: ObjectSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapping {
    pub name: String,
    pub sources: Vec<String>,
    pub subject: Template,
    pub classes: Vec<String>,
    pub predicate_objects: Vec<PredicateObject>,
}

impl Mapping {
    pub fn columns(&self) -> BTreeSet<&str> {
        let mut out: BTreeSet<&str> = self.subject.columns().collect();
        for po in &self.predicate_objects {
            match &po.object {
                ObjectSpec::Iri(t) | ObjectSpec::Literal { template: t, .. } => {
                    out.extend(t.columns())
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MappingSet {
    pub prefixes: BTreeMap<String, String>,
    pub mappings: Vec<Mapping>,
}

impl MappingSet {
    pub fn subject_mapping_count(&self) -> usize {
        self.mappings.len()
    }

    pub fn predicate_object_count(&self) -> usize {
        self.mappings
            .iter()
            .map(|m| m.classes.len() + m.predicate_objects.len())
            .sum()
    }
}

const IRI_FORBIDDEN: &[char] = &['<', '>', '"', '{', '}', '|', '^', '`', '\\'];

fn iri_template(raw: &str, prefixes: &BTreeMap<String, String>) -> Result<Template> {
    let invalid = |reason: &str| KgError::InvalidIriTemplate {
        template: raw.to_string(),
        reason: reason.to_string(),
    };
    // Expand the prefix on the text before the first slot.
    let head_end = raw.find('{').unwrap_or(raw.len());
    let colon = raw[..head_end].find(':').ok_or_else(|| invalid("no scheme or prefix"))?;
    let expanded_head = expand_name(&raw[..head_end], prefixes).ok_or_else(|| {
        invalid(&format!("unknown prefix {:?}", &raw[..colon]))
    })?;
    let expanded = format!("{expanded_head}{}", &raw[head_end..]);
    let template = Template::parse(&expanded).map_err(|e| invalid(&e))?;
    for part in &template.parts {
        if let TemplatePart::Text(t) = part {
            if t.chars().any(|c| c <= ' ' || IRI_FORBIDDEN.contains(&c)) {
                return Err(invalid("contains characters not allowed in an IRI"));
            }
        }
    }
    Ok(template)
}

fn constant_iri(raw: &str, prefixes: &BTreeMap<String, String>, line: usize) -> Result<String> {
    let template = iri_template(raw, prefixes)?;
    if !template.is_constant() {
        return Err(syntax(line, format!("{raw:?} must not contain column slots")));
    }
    Ok(template
        .parts
        .into_iter()
        .map(|p| match p {
            TemplatePart::Text(t) => t,
            TemplatePart::Column(_) => unreachable!(),
        })
        .collect())
}

fn expect_map(node: &Located, what: &str) -> Result<Vec<(String, Located)>> {
    match &node.node {
        Node::Map(entries) => Ok(entries.clone()),
        _ => Err(syntax(node.line, format!("{what} must be a mapping"))),
    }
}

fn seq_items(node: &Located) -> Vec<Located> {
    match &node.node {
        Node::Seq(items) => items.clone(),
        _ => vec![node.clone()],
    }
}

fn parse_sources(node: &Located) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for item in seq_items(node) {
        // `[papers.csv~csv]` and `papers.csv~csv` are both accepted.
        let first = match &item.node {
            Node::Seq(inner) => inner
                .first()
                .ok_or_else(|| syntax(item.line, "empty source"))?
                .scalar()?
                .to_string(),
            _ => item.scalar()?.to_string(),
        };
        let name = match first.rsplit_once('~') {
            Some((name, "csv")) => name.to_string(),
            Some((_, format)) => {
                return Err(syntax(item.line, format!("unsupported source format {format:?}")))
            }
            None => first,
        };
        if name.is_empty() {
            return Err(syntax(item.line, "empty source"));
        }
        out.push(name);
    }
    if out.is_empty() {
        return Err(syntax(node.line, "no sources"));
    }
    Ok(out)
}

fn parse_po(node: &Located, prefixes: &BTreeMap<String, String>) -> Result<(Option<String>, Option<PredicateObject>)> {
    let Node::Seq(items) = &node.node else {
        return Err(syntax(node.line, "predicate-object must be a list [predicate, object]"));
    };
    if !(2..=3).contains(&items.len()) {
        return Err(syntax(node.line, "predicate-object needs 2 or 3 items"));
    }
    let predicate = items[0].scalar()?;
    let object = items[1].scalar()?;
    let datatype = items.get(2).map(Located::scalar).transpose()?;
    if predicate == "a" {
        if datatype.is_some() {
            return Err(syntax(node.line, "class entries take no datatype"));
        }
        let class = object.strip_suffix("~iri").unwrap_or(object);
        return Ok((Some(constant_iri(class, prefixes, node.line)?), None));
    }
    let predicate = constant_iri(predicate, prefixes, node.line)?;
    let object = if let Some(iri) = object.strip_suffix("~iri") {
        if datatype.is_some() {
            return Err(syntax(node.line, "IRI objects take no datatype"));
        }
        ObjectSpec::Iri(iri_template(iri, prefixes)?)
    } else {
        let template = Template::parse(object).map_err(|e| syntax(node.line, e))?;
        let datatype = match datatype {
            Some(d) => constant_iri(d, prefixes, node.line)?,
            None => XSD_STRING.to_string(),
        };
        ObjectSpec::Literal { template, datatype }
    };
    Ok((None, Some(PredicateObject { predicate, object })))
}

/// Parses a mapping document:
///
/// ```yaml
/// prefixes:
///   ex: "https://example.org/"
/// mappings:
///   paper:
///     sources: [papers.csv~csv]
///     s: ex:paper/{id}
///     po:
///       - [a, onto:Paper]
///       - [dc:title, "{title}"]
///       - [onto:contains, "ex:paragraph/{paragraph_id}~iri"]
///       - [onto:count, "{n}", xsd:integer]
/// ```
pub fn parse_mapping(text: &str) -> Result<MappingSet> {
    let root = yaml::parse(text)?;
    let mut prefixes = builtin_prefixes();
    let mut mappings_node = None;
    for (key, value) in expect_map(&root, "the document")? {
        match key.as_str() {
            "prefixes" => {
                for (p, ns) in expect_map(&value, "prefixes")? {
                    prefixes.insert(p, ns.scalar()?.to_string());
                }
            }
            "mappings" => mappings_node = Some(value),
            other => return Err(syntax(value.line, format!("unknown key {other:?}"))),
        }
    }
    let mappings_node = mappings_node.ok_or_else(|| syntax(root.line, "missing `mappings`"))?;
    let mut mappings = Vec::new();
    for (name, body) in expect_map(&mappings_node, "mappings")? {
        let mut sources = None;
        let mut subject = None;
        let mut classes = Vec::new();
        let mut predicate_objects = Vec::new();
        for (key, value) in expect_map(&body, &format!("mapping {name:?}"))? {
            match key.as_str() {
                "sources" => sources = Some(parse_sources(&value)?),
                "s" | "subject" => subject = Some(iri_template(value.scalar()?, &prefixes)?),
                "po" | "predicateobjects" => {
                    for item in seq_items(&value) {
                        match parse_po(&item, &prefixes)? {
                            (Some(class), _) => classes.push(class),
                            (None, Some(po)) => predicate_objects.push(po),
                            (None, None) => unreachable!(),
                        }
                    }
                }
                other => {
                    return Err(syntax(value.line, format!("unknown key {other:?} in mapping {name:?}")))
                }
            }
        }
        mappings.push(Mapping {
            sources: sources.ok_or_else(|| syntax(body.line, format!("mapping {name:?} has no sources")))?,
            subject: subject.ok_or_else(|| syntax(body.line, format!("mapping {name:?} has no subject")))?,
            name,
            classes,
            predicate_objects,
        });
    }
    Ok(MappingSet { prefixes, mappings })
}

/// Checks every slot against the columns of its source tables.
pub fn validate_columns(set: &MappingSet, schemas: &BTreeMap<String, Vec<String>>) -> Result<()> {
    for m in &set.mappings {
        for source in &m.sources {
            let columns = schemas
                .get(source)
                .ok_or_else(|| KgError::MissingTable(source.clone()))?;
            if let Some(c) = m.columns().into_iter().find(|c| !columns.iter().any(|x| x == c)) {
                return Err(KgError::UnknownColumn {
                    column: c.to_string(),
                    source_table: source.clone(),
                });
            }
        }
    }
    Ok(())
}

fn mapping_triples(m: &Mapping, tables: &Tables) -> Result<Vec<Triple>> {
    let mut out = Vec::new();
    let rdf_type = Term::iri(RDF_TYPE);
    for source in &m.sources {
        let table = tables.get(source).ok_or_else(|| KgError::MissingTable(source.clone()))?;
        let index: BTreeMap<&str, usize> =
            table.headers.iter().enumerate().map(|(i, h)| (h.as_str(), i)).collect();
        if let Some(c) = m.columns().into_iter().find(|c| !index.contains_key(c)) {
            return Err(KgError::UnknownColumn {
                column: c.to_string(),
                source_table: source.clone(),
            });
        }
        for row in &table.rows {
            let Some(subject) = m.subject.render(row, &index, true) else {
                continue;
            };
            let subject = Term::Iri(subject);
            for class in &m.classes {
                out.push(Triple::new(subject.clone(), rdf_type.clone(), Term::iri(class)));
            }
            for po in &m.predicate_objects {
                let object = match &po.object {
                    ObjectSpec::Iri(t) => t.render(row, &index, true).map(Term::Iri),
                    ObjectSpec::Literal { template, datatype } => template
                        .render(row, &index, false)
                        .map(|lex| Term::typed(lex, datatype.clone())),
                };
                if let Some(object) = object {
                    out.push(Triple::new(subject.clone(), Term::iri(&po.predicate), object));
                }
            }
        }
    }
    Ok(out)
}

/// Applies every mapping to every row of its sources.
///
/// A row whose subject slots are empty yields nothing; otherwise it yields
/// one `rdf:type` triple per class and one triple per predicate-object whose
/// referenced cells are all non-empty. Duplicates collapse.
pub fn generate_triples(tables: &Tables, set: &MappingSet) -> Result<TripleSet> {
    let per_mapping: Vec<Vec<Triple>> = set
        .mappings
        .par_iter()
        .map(|m| mapping_triples(m, tables))
        .collect::<Result<_>>()?;
    Ok(per_mapping.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kgmap::Table;

    fn table(headers: &[&str], rows: &[&[&str]]) -> Table {
        Table {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: rows
                .iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        }
    }

    const PAPER: &str = "\
prefixes:
  ex: https://ex.org/
mappings:
  paper:
    sources:
      - [papers.csv~csv]
    s: ex:paper/{id}
    po:
      - [a, onto:Paper]
      - [dc:title, \"{title}\"]
";

    #[test]
    fn parse_binds_subject_columns() {
        let set = parse_mapping(PAPER).unwrap();
        let m = &set.mappings[0];
        assert_eq!(m.sources, vec!["papers.csv"]);
        assert_eq!(m.subject.columns().collect::<Vec<_>>(), vec!["id"]);
        assert_eq!(m.classes, vec![format!("{}Paper", crate::kgmap::VOCABULARY)]);
        assert_eq!(set.predicate_object_count(), 2);
    }

    #[test]
    fn class_and_title_make_two_triples() {
        let set = parse_mapping(PAPER).unwrap();
        let mut tables = Tables::new();
        tables.insert("papers.csv".into(), table(&["id", "title"], &[&["A1", "T"], &["A2", ""]]));
        let triples = generate_triples(&tables, &set).unwrap();
        let lines: Vec<String> = triples.iter().map(|t| t.to_string()).collect();
        assert_eq!(lines.len(), 3);
        assert!(lines.contains(
            &"<https://ex.org/paper/A1> <http://purl.org/dc/terms/title> \"T\" .".to_string()
        ));
        assert!(lines.iter().filter(|l| l.starts_with("<https://ex.org/paper/A2>")).count() == 1);
    }

    #[test]
    fn slot_values_are_percent_encoded() {
        let doc = "\
mappings:
  m:
    sources: [drug_mentions.csv~csv]
    s: https://ex.org/paragraph/{unit_id}
    po:
      - [onto:mentions, \"https://ex.org/substance/{atc_code}~iri\"]
";
        let set = parse_mapping(doc).unwrap();
        let mut tables = Tables::new();
        tables.insert(
            "drug_mentions.csv".into(),
            table(&["unit_id", "atc_code"], &[&["A1#p0", "P01BA02"], &["A1#p0", "P01BA02"]]),
        );
        let triples = generate_triples(&tables, &set).unwrap();
        assert_eq!(triples.len(), 1);
        assert_eq!(
            triples.iter().next().unwrap().to_string(),
            format!(
                "<https://ex.org/paragraph/A1%23p0> <{}mentions> <https://ex.org/substance/P01BA02> .",
                crate::kgmap::VOCABULARY
            )
        );
    }

    #[test]
    fn unknown_column_and_missing_table() {
        let doc = PAPER.replace("{title}", "{foo}");
        let set = parse_mapping(&doc).unwrap();
        let schemas = BTreeMap::from([("papers.csv".to_string(), vec!["id".to_string(), "title".to_string()])]);
        match validate_columns(&set, &schemas) {
            Err(KgError::UnknownColumn { column, .. }) => assert_eq!(column, "foo"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            generate_triples(&Tables::new(), &set),
            Err(KgError::MissingTable(t)) if t == "papers.csv"
        ));
    }

    #[test]
    fn rejects_bad_documents() {
        let bad_prefix = PAPER.replace("ex:paper", "zz:paper");
        assert!(matches!(parse_mapping(&bad_prefix), Err(KgError::InvalidIriTemplate { .. })));
        let bad_slot = PAPER.replace("ex:paper/{id}", "ex:paper/{id");
        assert!(matches!(parse_mapping(&bad_slot), Err(KgError::InvalidIriTemplate { .. })));
        let space = PAPER.replace("ex:paper/{id}", "\"ex:pa per/{id}\"");
        assert!(matches!(parse_mapping(&space), Err(KgError::InvalidIriTemplate { .. })));
        let unknown = PAPER.replace("    s:", "    colour: red\n    s:");
        assert!(matches!(parse_mapping(&unknown), Err(KgError::Syntax { line: 7, .. })));
        let json = PAPER.replace("~csv", "~json");
        assert!(matches!(parse_mapping(&json), Err(KgError::Syntax { .. })));
    }
}
