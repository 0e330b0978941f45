//! RDF knowledge graph over the annotations.
//!
//! Annotations are exported to CSV tables, compiled through a declarative
//! mapping document (a YAML subset modelled on YARRRML) into triples,
//! written as canonical N-Triples and queried with basic graph patterns.

mod export;
mod mapping;
mod query;
mod rdf;
mod yaml;

pub use export::{
    export_annotations, export_schemas, read_tables, write_tables, Table, Tables, EXPORT_TABLES,
};
pub use mapping::{
    generate_triples, parse_mapping, validate_columns, Mapping, MappingSet, ObjectSpec,
    PredicateObject, Template, TemplatePart,
};
pub use query::{evaluate_query, Filter, Graph, PatternQuery, QueryResult};
pub use rdf::{
    parse_ntriples, serialize_ntriples, serialize_turtle, Term, Triple, TripleSet, RDF_TYPE,
    XSD_STRING,
};

use std::collections::BTreeMap;

/// Namespace of the project vocabulary.
pub const VOCABULARY: &str = "https://w3id.org/def/DRUGS4COVID19#";
/// Default namespace of generated resources.
pub const RESOURCE_BASE: &str = "https://drugs4covid.example/resource/";
/// Mapping document shipped with the crate.
pub const DEFAULT_MAPPING: &str = include_str!("../../mapping.yml");

/// Prefixes available to mapping documents and queries without declaration.
pub fn builtin_prefixes() -> BTreeMap<String, String> {
    [
        ("dc", "http://purl.org/dc/terms/"),
        ("onto", VOCABULARY),
        ("rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"),
        ("rdfs", "http://www.w3.org/2000/01/rdf-schema#"),
        ("skos", "http://www.w3.org/2004/02/skos/core#"),
        ("xsd", "http://www.w3.org/2001/XMLSchema#"),
    ]
    .into_iter()
    .map(|(p, ns)| (p.to_string(), ns.to_string()))
    .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum KgError {
    #[error("mention in unknown unit {0:?}")]
    DanglingMention(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("column {column:?} is not in {source_table}")]
    UnknownColumn { column: String, source_table: String },
    #[error("invalid IRI template {template:?}: {reason}")]
    InvalidIriTemplate { template: String, reason: String },
    #[error("missing table {0}")]
    MissingTable(String),
    #[error("N-Triples line {line}: {message}")]
    NTriples { line: usize, message: String },
    #[error("invalid query term {0:?}")]
    InvalidTerm(String),
    #[error("variable ?{0} does not occur in any pattern")]
    UnboundSelectVar(String),
    #[error("query has no patterns")]
    EmptyQuery,
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KgError>;

/// Expands `prefix:local` against `prefixes`; `<iri>` and absolute IRIs with
/// an authority (`scheme://`) or a `urn:` scheme pass through.
pub(crate) fn expand_name(name: &str, prefixes: &BTreeMap<String, String>) -> Option<String> {
    if let Some(inner) = name.strip_prefix('<').and_then(|n| n.strip_suffix('>')) {
        return Some(inner.to_string());
    }
    let (prefix, local) = name.split_once(':')?;
    if let Some(ns) = prefixes.get(prefix) {
        return Some(format!("{ns}{local}"));
    }
    let scheme_ok = !prefix.is_empty()
        && prefix.starts_with(|c: char| c.is_ascii_alphabetic())
        && prefix.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    (scheme_ok && (local.starts_with("//") || prefix == "urn")).then(|| name.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_mapping_covers_vocabulary() {
        let set = parse_mapping(DEFAULT_MAPPING).unwrap();
        assert!(set.mappings.len() >= 10);
        validate_columns(&set, &export_schemas()).unwrap();
        let classes: Vec<&str> = set
            .mappings
            .iter()
            .flat_map(|m| m.classes.iter())
            .map(|c| c.strip_prefix(VOCABULARY).unwrap())
            .collect();
        for c in ["Paper", "Paragraph", "Sentence", "Drug", "ActiveSubstance", "Disease"] {
            assert!(classes.contains(&c), "{c}");
        }
    }

    #[test]
    fn name_expansion() {
        let p = builtin_prefixes();
        assert_eq!(expand_name("dc:title", &p).unwrap(), "http://purl.org/dc/terms/title");
        assert_eq!(expand_name("<x:y>", &p).unwrap(), "x:y");
        assert_eq!(expand_name("https://a.b/c", &p).unwrap(), "https://a.b/c");
        assert_eq!(expand_name("urn:isbn:1", &p).unwrap(), "urn:isbn:1");
        assert!(expand_name("zz:thing", &p).is_none());
        assert!(expand_name("plain", &p).is_none());
    }
}
