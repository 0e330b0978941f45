use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::rdf::{Term, Triple, RDF_TYPE, XSD_STRING};
use super::{builtin_prefixes, expand_name, KgError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Filter {
    /// Literal lexical form starts with `prefix`.
    Strstarts { var: String, prefix: String },
    /// Bound term equals `value` (written like a pattern term).
    Equals { var: String, value: String },
}

/// Conjunctive basic graph pattern with filters, in JSON form:
///
/// ```json
/// {"select": ["s"], "distinct": true,
///  "patterns": [["?s", "a", "onto:Paragraph"], ["?s", "onto:section", "\"Results\""]],
///  "filters": [{"op": "strstarts", "var": "s", "prefix": "https://"}]}
/// ```
///
/// Pattern terms are `?var`, `a`, `<iri>`, `prefix:local` or a quoted
/// literal with an optional `^^datatype` or `@lang`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternQuery {
    #[serde(default)]
    pub prefixes: BTreeMap<String, String>,
    pub select: Vec<String>,
    pub patterns: Vec<[String; 3]>,
    #[serde(default)]
    pub filters: Vec<Filter>,
    #[serde(default)]
    pub distinct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub vars: Vec<String>,
    pub rows: Vec<Vec<Term>>,
}

impl QueryResult {
    /// Rows as objects keyed by variable name, each value shaped like a
    /// SPARQL JSON result term.
    pub fn bindings_json(&self) -> serde_json::Value {
        let term = |t: &Term| match t {
            Term::Iri(v) => serde_json::json!({"type": "uri", "value": v}),
            Term::Blank(v) => serde_json::json!({"type": "bnode", "value": v}),
            Term::Literal {
                lexical,
                datatype,
                language,
            } => {
                let mut o = serde_json::json!({"type": "literal", "value": lexical});
                if let Some(lang) = language {
                    o["xml:lang"] = lang.clone().into();
                } else if datatype != XSD_STRING {
                    o["datatype"] = datatype.clone().into();
                }
                o
            }
        };
        self.rows
            .iter()
            .map(|row| {
                self.vars
                    .iter()
                    .zip(row)
                    .map(|(v, t)| (v.clone(), term(t)))
                    .collect::<serde_json::Map<_, _>>()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    Var(usize),
    Const(Term),
}

fn strip_var(v: &str) -> &str {
    v.strip_prefix('?').or_else(|| v.strip_prefix('$')).unwrap_or(v)
}

fn parse_term(raw: &str, prefixes: &BTreeMap<String, String>) -> Result<Term> {
    let invalid = || KgError::InvalidTerm(raw.to_string());
    let raw = raw.trim();
    if raw == "a" {
        return Ok(Term::iri(RDF_TYPE));
    }
    if let Some(q) = raw.chars().next().filter(|c| *c == '"' || *c == '\'') {
        let close = raw[1..].rfind(q).map(|i| i + 1).ok_or_else(invalid)?;
        let lexical = raw[1..close].replace(&format!("\\{q}"), &q.to_string());
        let suffix = &raw[close + 1..];
        return if suffix.is_empty() {
            Ok(Term::string(lexical))
        } else if let Some(dt) = suffix.strip_prefix("^^") {
            Ok(Term::typed(lexical, expand_name(dt, prefixes).ok_or_else(invalid)?))
        } else if let Some(lang) = suffix.strip_prefix('@') {
            Ok(Term::Literal {
                lexical,
                datatype: super::rdf::RDF_LANG_STRING.to_string(),
                language: Some(lang.to_string()),
            })
        } else {
            Err(invalid())
        };
    }
    expand_name(raw, prefixes).map(Term::Iri).ok_or_else(invalid)
}

/// Triples with position indexes for pattern matching.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    triples: Vec<Triple>,
    by_subject: HashMap<Term, Vec<usize>>,
    by_predicate: HashMap<Term, Vec<usize>>,
    by_object: HashMap<Term, Vec<usize>>,
}

impl Graph {
    pub fn new(triples: impl IntoIterator<Item = Triple>) -> Self {
        let mut set: Vec<Triple> = triples.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        set.shrink_to_fit();
        let mut g = Graph {
            triples: set,
            ..Default::default()
        };
        for (i, t) in g.triples.iter().enumerate() {
            g.by_subject.entry(t.subject.clone()).or_default().push(i);
            g.by_predicate.entry(t.predicate.clone()).or_default().push(i);
            g.by_object.entry(t.object.clone()).or_default().push(i);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    fn candidates(&self, pattern: &[Slot; 3], binding: &[Option<Term>]) -> &[usize] {
        static EMPTY: Vec<usize> = Vec::new();
        let resolve = |s: &Slot| -> Option<Term> {
            match s {
                Slot::Const(t) => Some(t.clone()),
                Slot::Var(v) => binding[*v].clone(),
            }
        };
        let lists = [
            resolve(&pattern[0]).map(|t| self.by_subject.get(&t)),
            resolve(&pattern[2]).map(|t| self.by_object.get(&t)),
            resolve(&pattern[1]).map(|t| self.by_predicate.get(&t)),
        ];
        lists
            .into_iter()
            .flatten()
            .map(|l| l.map_or(EMPTY.as_slice(), Vec::as_slice))
            .min_by_key(|l| l.len())
            .unwrap_or(&[])
    }

    pub fn query(&self, query: &PatternQuery) -> Result<QueryResult> {
        if query.patterns.is_empty() {
            return Err(KgError::EmptyQuery);
        }
        let mut prefixes = builtin_prefixes();
        prefixes.extend(query.prefixes.clone());

        let mut vars: Vec<String> = Vec::new();
        let mut var_index = |name: &str| -> usize {
            match vars.iter().position(|v| v == name) {
                Some(i) => i,
                None => {
                    vars.push(name.to_string());
                    vars.len() - 1
                }
            }
        };
        let mut patterns = Vec::new();
        for p in &query.patterns {
            let mut slots = Vec::with_capacity(3);
            for raw in p {
                let raw = raw.trim();
                slots.push(if raw.starts_with('?') || raw.starts_with('$') {
                    Slot::Var(var_index(strip_var(raw)))
                } else {
                    Slot::Const(parse_term(raw, &prefixes)?)
                });
            }
            let slots: [Slot; 3] = slots.try_into().expect("three terms");
            patterns.push(slots);
        }
        let lookup = |name: &str| -> Result<usize> {
            let name = strip_var(name);
            vars.iter()
                .position(|v| v == name)
                .ok_or_else(|| KgError::UnboundSelectVar(name.to_string()))
        };
        let select: Vec<usize> = query.select.iter().map(|s| lookup(s)).collect::<Result<_>>()?;
        enum Check {
            Starts(usize, String),
            Equals(usize, Term),
        }
        let checks: Vec<Check> = query
            .filters
            .iter()
            .map(|f| match f {
                Filter::Strstarts { var, prefix } => Ok(Check::Starts(lookup(var)?, prefix.clone())),
                Filter::Equals { var, value } => {
                    Ok(Check::Equals(lookup(var)?, parse_term(value, &prefixes)?))
                }
            })
            .collect::<Result<_>>()?;

        // Most-constrained pattern first, given the variables bound so far.
        let mut order = Vec::with_capacity(patterns.len());
        let mut bound = vec![false; vars.len()];
        let mut remaining: Vec<usize> = (0..patterns.len()).collect();
        while !remaining.is_empty() {
            let score = |i: usize| {
                patterns[i]
                    .iter()
                    .filter(|s| match s {
                        Slot::Const(_) => true,
                        Slot::Var(v) => bound[*v],
                    })
                    .count()
            };
            let (pos, &best) = remaining
                .iter()
                .enumerate()
                .max_by(|a, b| score(*a.1).cmp(&score(*b.1)).then(b.1.cmp(a.1)))
                .expect("non-empty");
            remaining.remove(pos);
            for s in &patterns[best] {
                if let Slot::Var(v) = s {
                    bound[*v] = true;
                }
            }
            order.push(best);
        }

        let mut bindings: Vec<Vec<Option<Term>>> = vec![vec![None; vars.len()]];
        for &pi in &order {
            let pattern = &patterns[pi];
            let mut next = Vec::new();
            for b in &bindings {
                'triple: for &ti in self.candidates(pattern, b) {
                    let t = &self.triples[ti];
                    let mut nb = b.clone();
                    for (slot, term) in pattern.iter().zip([&t.subject, &t.predicate, &t.object]) {
                        match slot {
                            Slot::Const(c) if c != term => continue 'triple,
                            Slot::Const(_) => {}
                            Slot::Var(v) => match &nb[*v] {
                                Some(x) if x != term => continue 'triple,
                                Some(_) => {}
                                None => nb[*v] = Some(term.clone()),
                            },
                        }
                    }
                    next.push(nb);
                }
            }
            bindings = next;
            if bindings.is_empty() {
                break;
            }
        }

        let mut rows: Vec<Vec<Term>> = bindings
            .into_iter()
            .filter(|b| {
                checks.iter().all(|c| match c {
                    Check::Starts(v, prefix) => matches!(
                        &b[*v],
                        Some(Term::Literal { lexical, .. }) if lexical.starts_with(prefix.as_str())
                    ),
                    Check::Equals(v, term) => b[*v].as_ref() == Some(term),
                })
            })
            .map(|b| {
                select
                    .iter()
                    .map(|&i| b[i].clone().expect("all pattern variables are bound"))
                    .collect()
            })
            .collect();
        rows.sort();
        if query.distinct {
            rows.dedup();
        }
        Ok(QueryResult {
            vars: select.iter().map(|&i| vars[i].clone()).collect(),
            rows,
        })
    }
}

/// Evaluates `query` over `triples`; see [`Graph::query`].
pub fn evaluate_query<'a>(
    triples: impl IntoIterator<Item = &'a Triple>,
    query: &PatternQuery,
) -> Result<QueryResult> {
    Graph::new(triples.into_iter().cloned()).query(query)
}
