//! Gazetteer-based recognition of drugs (ATC) and diseases (MeSH).
//!
//! Surface forms are matched as token sequences, so a gazetteer entry never
//! matches inside a longer word. Matching is case-insensitive and picks the
//! leftmost-longest, non-overlapping entry at every position.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, CorpusStore};

pub const MENTIONS_FILE: &str = "mentions.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum AnnotateError {
    #[error("invalid ATC code {0:?}: expected letter, 2 digits, 2 letters, 2 digits")]
    InvalidAtcFormat(String),
    #[error("invalid {kind} code {code:?}")]
    InvalidCode { kind: EntityKind, code: String },
    #[error("surface form {surface:?} maps to both {first} and {second}")]
    ConflictingSynonym {
        surface: String,
        first: String,
        second: String,
    },
    #[error("gazetteer line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("malformed mention record: {0}")]
    MalformedMention(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, AnnotateError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Drug,
    Disease,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Drug => "drug",
            EntityKind::Disease => "disease",
        })
    }
}

// ---------------------------------------------------------------------------
// Codes
// ---------------------------------------------------------------------------

/// A level-5 ATC code. Upper levels are prefixes of length 1, 3, 4 and 5.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtcCode(String);

const ATC_LEVEL_LENGTHS: [usize; 5] = [1, 3, 4, 5, 7];

impl AtcCode {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Level `1..=5` prefix.
    pub fn level(&self, level: usize) -> &str {
        assert!((1..=5).contains(&level), "ATC levels are numbered 1 to 5");
        &self.0[..ATC_LEVEL_LENGTHS[level - 1]]
    }

    pub fn levels(&self) -> [&str; 5] {
        ATC_LEVEL_LENGTHS.map(|n| &self.0[..n])
    }
}

impl fmt::Display for AtcCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn parse_atc(code: &str) -> Result<AtcCode> {
    let b = code.as_bytes();
    let letter = |c: u8| c.is_ascii_uppercase();
    let digit = |c: u8| c.is_ascii_digit();
    let ok = b.len() == 7
        && letter(b[0])
        && digit(b[1])
        && digit(b[2])
        && letter(b[3])
        && letter(b[4])
        && digit(b[5])
        && digit(b[6]);
    if ok {
        Ok(AtcCode(code.to_string()))
    } else {
        Err(AnnotateError::InvalidAtcFormat(code.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshDescriptor {
    pub code: String,
    pub label: String,
    pub tree_numbers: Vec<String>,
}

pub fn is_mesh_code(code: &str) -> bool {
    let mut bytes = code.bytes();
    matches!(bytes.next(), Some(c) if c.is_ascii_uppercase())
        && code.len() > 1
        && bytes.all(|c| c.is_ascii_digit())
}

fn is_tree_number(tree: &str) -> bool {
    !tree.is_empty()
        && tree
            .split('.')
            .all(|seg| !seg.is_empty() && seg.bytes().all(|c| c.is_ascii_alphanumeric()))
}

impl MeshDescriptor {
    pub fn new(code: &str, label: &str, tree_numbers: Vec<String>) -> Result<Self> {
        if !is_mesh_code(code) || !tree_numbers.iter().all(|t| is_tree_number(t)) {
            return Err(AnnotateError::InvalidCode {
                kind: EntityKind::Disease,
                code: code.to_string(),
            });
        }
        Ok(Self {
            code: code.to_string(),
            label: label.to_string(),
            tree_numbers,
        })
    }
}

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

/// Byte spans of gazetteer tokens: runs of alphanumerics, where a `-` or `/`
/// between two alphanumerics stays inside the token.
pub fn token_spans(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut iter = text.char_indices().peekable();
    while let Some((pos, c)) = iter.next() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(pos);
            }
            continue;
        }
        if let Some(s) = start {
            let joins = matches!(c, '-' | '/')
                && iter.peek().is_some_and(|&(_, next)| next.is_alphanumeric());
            if !joins {
                out.push((s, pos));
                start = None;
            }
        }
    }
    if let Some(s) = start {
        out.push((s, text.len()));
    }
    out
}

fn push_lowercase(buf: &mut String, token: &str) {
    buf.clear();
    if token.is_ascii() {
        buf.push_str(token);
        buf.make_ascii_lowercase();
    } else {
        buf.extend(token.chars().flat_map(char::to_lowercase));
    }
}

/// Lowercased tokens joined by single spaces; the key under which a surface
/// form is stored.
pub fn normalize_surface(text: &str) -> String {
    let mut buf = String::new();
    let mut out = String::new();
    for (s, e) in token_spans(text) {
        push_lowercase(&mut buf, &text[s..e]);
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&buf);
    }
    out
}

// ---------------------------------------------------------------------------
// Gazetteer
// ---------------------------------------------------------------------------

/// One row of a gazetteer source: code, preferred label, `;`-separated synonyms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GazetteerRow {
    pub code: String,
    pub label: String,
    pub synonyms: String,
    pub tree_numbers: String,
}

impl GazetteerRow {
    pub fn new(code: &str, label: &str, synonyms: &str) -> Self {
        Self {
            code: code.into(),
            label: label.into(),
            synonyms: synonyms.into(),
            tree_numbers: String::new(),
        }
    }
}

const ROOT: u32 = 0;

#[derive(Debug, Clone)]
pub struct Gazetteer {
    kind: EntityKind,
    token_ids: HashMap<String, u32>,
    edges: HashMap<(u32, u32), u32>,
    terminal: Vec<Option<u32>>,
    codes: Vec<String>,
    labels: BTreeMap<String, String>,
    entries: BTreeMap<String, String>,
    tree_numbers: BTreeMap<String, Vec<String>>,
}

/// A located gazetteer hit in a piece of text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hit {
    pub start: usize,
    pub end: usize,
    pub code: String,
}

impl Gazetteer {
    pub fn build(kind: EntityKind, rows: &[GazetteerRow]) -> Result<Self> {
        let mut gaz = Gazetteer {
            kind,
            token_ids: HashMap::new(),
            edges: HashMap::new(),
            terminal: vec![None],
            codes: Vec::new(),
            labels: BTreeMap::new(),
            entries: BTreeMap::new(),
            tree_numbers: BTreeMap::new(),
        };
        let mut code_index: HashMap<String, u32> = HashMap::new();
        for row in rows {
            let code = row.code.trim();
            match kind {
                EntityKind::Drug => {
                    parse_atc(code)?;
                }
                EntityKind::Disease => {
                    let trees = split_list(&row.tree_numbers);
                    let desc = MeshDescriptor::new(code, &row.label, trees)?;
                    if !desc.tree_numbers.is_empty() {
                        gaz.tree_numbers.insert(desc.code, desc.tree_numbers);
                    }
                }
            }
            let idx = *code_index.entry(code.to_string()).or_insert_with(|| {
                gaz.codes.push(code.to_string());
                (gaz.codes.len() - 1) as u32
            });
            gaz.labels
                .entry(code.to_string())
                .or_insert_with(|| row.label.trim().to_string());
            let surfaces = std::iter::once(row.label.as_str()).chain(row.synonyms.split(';'));
            for surface in surfaces {
                gaz.insert(surface, idx)?;
            }
        }
        Ok(gaz)
    }

    fn insert(&mut self, surface: &str, code_idx: u32) -> Result<()> {
        let key = normalize_surface(surface);
        if key.is_empty() {
            return Ok(());
        }
        let code = &self.codes[code_idx as usize];
        if let Some(existing) = self.entries.get(&key) {
            if existing != code {
                return Err(AnnotateError::ConflictingSynonym {
                    surface: key,
                    first: existing.clone(),
                    second: code.clone(),
                });
            }
            return Ok(());
        }
        let mut node = ROOT;
        for token in key.split(' ') {
            let next_token = self.token_ids.len() as u32;
            let tid = *self.token_ids.entry(token.to_string()).or_insert(next_token);
            node = match self.edges.get(&(node, tid)) {
                Some(&child) => child,
                None => {
                    let child = self.terminal.len() as u32;
                    self.terminal.push(None);
                    self.edges.insert((node, tid), child);
                    child
                }
            };
        }
        self.terminal[node as usize] = Some(code_idx);
        self.entries.insert(key, code.clone());
        Ok(())
    }

    pub fn from_csv_path(kind: EntityKind, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_csv_str(kind, &text)
    }

    /// Reads `code,label,synonyms[,tree_numbers]` rows with a header line.
    pub fn from_csv_str(kind: EntityKind, text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| AnnotateError::Csv {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let field = |i: usize| record.get(i).unwrap_or_default().to_string();
            if record.len() < 2 {
                return Err(AnnotateError::Csv {
                    line: record.position().map_or(0, |p| p.line()),
                    message: "expected at least code,label".into(),
                });
            }
            rows.push(GazetteerRow {
                code: field(0),
                label: field(1),
                synonyms: field(2),
                tree_numbers: field(3),
            });
        }
        Self::build(kind, &rows)
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn label(&self, code: &str) -> Option<&str> {
        self.labels.get(code).map(String::as_str)
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(String::as_str)
    }

    pub fn contains_code(&self, code: &str) -> bool {
        self.labels.contains_key(code)
    }

    pub fn tree_numbers(&self, code: &str) -> &[String] {
        self.tree_numbers.get(code).map_or(&[], Vec::as_slice)
    }

    /// Normalized surface forms and their codes.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Resolves a user keyword: an exact code, or any label or synonym.
    pub fn resolve(&self, keyword: &str) -> Option<&str> {
        let trimmed = keyword.trim();
        if let Some((code, _)) = self.labels.get_key_value(&trimmed.to_ascii_uppercase()) {
            return Some(code);
        }
        self.entries
            .get(&normalize_surface(trimmed))
            .map(String::as_str)
    }

    pub fn find_mentions(&self, text: &str) -> Vec<Hit> {
        let spans = token_spans(text);
        let mut buf = String::new();
        let ids: Vec<Option<u32>> = spans
            .iter()
            .map(|&(s, e)| {
                push_lowercase(&mut buf, &text[s..e]);
                self.token_ids.get(buf.as_str()).copied()
            })
            .collect();

        let mut hits = Vec::new();
        let mut i = 0;
        while i < ids.len() {
            let mut node = ROOT;
            let mut best: Option<(usize, u32)> = None;
            let mut j = i;
            while let Some(Some(tid)) = ids.get(j) {
                match self.edges.get(&(node, *tid)) {
                    Some(&child) => node = child,
                    None => break,
                }
                j += 1;
                if let Some(code) = self.terminal[node as usize] {
                    best = Some((j, code));
                }
            }
            match best {
                Some((end_tok, code)) => {
                    hits.push(Hit {
                        start: spans[i].0,
                        end: spans[end_tok - 1].1,
                        code: self.codes[code as usize].clone(),
                    });
                    i = end_tok;
                }
                None => i += 1,
            }
        }
        hits
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

// ---------------------------------------------------------------------------
// Corpus annotation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mention {
    pub unit_id: String,
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub code: String,
    pub kind: EntityKind,
}

impl Mention {
    pub fn is_sentence_level(&self) -> bool {
        corpus::is_sentence_id(&self.unit_id)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSummary {
    pub drugs: usize,
    pub diseases: usize,
    pub paragraph_mentions: usize,
    pub sentence_mentions: usize,
}

/// Mentions at paragraph and sentence granularity, ordered by
/// `(unit_id, start, end, kind)`.
#[derive(Debug, Clone, Default)]
pub struct AnnotationStore {
    mentions: Vec<Mention>,
}

impl AnnotationStore {
    pub fn from_mentions(mut mentions: Vec<Mention>) -> Self {
        mentions.sort_by(|a, b| {
            (&a.unit_id, a.start, a.end, a.kind).cmp(&(&b.unit_id, b.start, b.end, b.kind))
        });
        mentions.dedup();
        Self { mentions }
    }

    pub fn mentions(&self) -> &[Mention] {
        &self.mentions
    }

    pub fn is_empty(&self) -> bool {
        self.mentions.is_empty()
    }

    pub fn paragraph_mentions(&self) -> impl Iterator<Item = &Mention> {
        self.mentions.iter().filter(|m| !m.is_sentence_level())
    }

    pub fn sentence_mentions(&self) -> impl Iterator<Item = &Mention> {
        self.mentions.iter().filter(|m| m.is_sentence_level())
    }

    /// Mentions recorded for one unit.
    pub fn unit_mentions(&self, unit_id: &str) -> &[Mention] {
        let lo = self.mentions.partition_point(|m| m.unit_id.as_str() < unit_id);
        let hi = self.mentions.partition_point(|m| m.unit_id.as_str() <= unit_id);
        &self.mentions[lo..hi]
    }

    pub fn distinct_codes(&self, kind: EntityKind) -> BTreeSet<&str> {
        self.mentions
            .iter()
            .filter(|m| m.kind == kind)
            .map(|m| m.code.as_str())
            .collect()
    }

    /// Distinct codes of `kind` per paragraph, for paragraphs with at least one.
    pub fn paragraph_codes(&self, kind: EntityKind) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut out: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for m in self.paragraph_mentions().filter(|m| m.kind == kind) {
            out.entry(m.unit_id.as_str()).or_default().insert(&m.code);
        }
        out
    }

    pub fn summary(&self) -> AnnotationSummary {
        AnnotationSummary {
            drugs: self.distinct_codes(EntityKind::Drug).len(),
            diseases: self.distinct_codes(EntityKind::Disease).len(),
            paragraph_mentions: self.paragraph_mentions().count(),
            sentence_mentions: self.sentence_mentions().count(),
        }
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut out = BufWriter::new(fs::File::create(path)?);
        for m in &self.mentions {
            serde_json::to_writer(&mut out, m).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut mentions = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            mentions.push(
                serde_json::from_str(&line)
                    .map_err(|e| AnnotateError::MalformedMention(e.to_string()))?,
            );
        }
        Ok(Self::from_mentions(mentions))
    }
}

/// Annotates every paragraph with both gazetteers, then projects each
/// paragraph-level mention onto the sentence that fully contains it.
pub fn annotate_corpus(store: &CorpusStore, atc: &Gazetteer, mesh: &Gazetteer) -> AnnotationStore {
    let sentences = store.sentences();
    let mentions: Vec<Mention> = store
        .paragraphs()
        .par_iter()
        .flat_map_iter(|p| {
            let lo = sentences.partition_point(|s| s.paragraph_id.as_str() < p.id.as_str());
            let hi = sentences.partition_point(|s| s.paragraph_id.as_str() <= p.id.as_str());
            let sents = &sentences[lo..hi];
            let mut out = Vec::new();
            for gaz in [atc, mesh] {
                for hit in gaz.find_mentions(&p.text) {
                    let surface = p.text[hit.start..hit.end].to_string();
                    if let Some(s) = sents.iter().find(|s| s.start <= hit.start && hit.end <= s.end) {
                        out.push(Mention {
                            unit_id: s.id.clone(),
                            start: hit.start - s.start,
                            end: hit.end - s.start,
                            surface: surface.clone(),
                            code: hit.code.clone(),
                            kind: gaz.kind(),
                        });
                    }
                    out.push(Mention {
                        unit_id: p.id.clone(),
                        start: hit.start,
                        end: hit.end,
                        surface,
                        code: hit.code,
                        kind: gaz.kind(),
                    });
                }
            }
            out
        })
        .collect();
    AnnotationStore::from_mentions(mentions)
}
