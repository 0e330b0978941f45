//! Corpus ingestion and segmentation.
//!
//! Articles arrive as CORD-19 shaped JSON records (`paper_id`,
//! `metadata.title`, `abstract[]`, `body_text[]`). Each abstract or body
//! entry becomes one [`Paragraph`]; paragraphs are split into [`Sentence`]s
//! by a rule-based splitter. All offsets are UTF-8 byte offsets into the
//! paragraph text.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const DOCUMENTS_FILE: &str = "documents.jsonl";
pub const STATS_FILE: &str = "stats.json";

/// Section label assigned to abstract paragraphs.
pub const ABSTRACT_SECTION: &str = "abstract";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("record has no id/paper_id field")]
    MissingId,
    #[error("duplicate document id {0:?}")]
    DuplicateDocumentId(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<CorpusError>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyParagraph {
    pub section: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub abstract_paragraphs: Vec<String>,
    pub body_paragraphs: Vec<BodyParagraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

impl Document {
    pub fn paragraph_count(&self) -> usize {
        self.abstract_paragraphs.len() + self.body_paragraphs.len()
    }

    /// Paragraphs in source order: abstract entries first, then body entries.
    pub fn paragraphs(&self) -> Vec<Paragraph> {
        let abstracts = self
            .abstract_paragraphs
            .iter()
            .map(|t| (ABSTRACT_SECTION, t.as_str()));
        let body = self
            .body_paragraphs
            .iter()
            .map(|b| (b.section.as_str(), b.text.as_str()));
        abstracts
            .chain(body)
            .enumerate()
            .map(|(ordinal, (section, text))| Paragraph {
                id: paragraph_id(&self.id, ordinal),
                doc_id: self.id.clone(),
                section: section.to_string(),
                text: text.to_string(),
                ordinal,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: String,
    pub doc_id: String,
    pub section: String,
    pub text: String,
    pub ordinal: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub paragraph_id: String,
    pub text: String,
    pub start: usize,
    pub end: usize,
}

pub fn paragraph_id(doc_id: &str, ordinal: usize) -> String {
    format!("{doc_id}#p{ordinal}")
}

pub fn sentence_id(paragraph_id: &str, ordinal: usize) -> String {
    format!("{paragraph_id}#s{ordinal}")
}

/// Splits a unit id into its paragraph id when it names a sentence.
pub fn parent_paragraph(unit_id: &str) -> &str {
    match unit_id.rfind("#s") {
        Some(pos) if unit_id[pos + 2..].bytes().all(|b| b.is_ascii_digit()) => &unit_id[..pos],
        _ => unit_id,
    }
}

pub fn is_sentence_id(unit_id: &str) -> bool {
    parent_paragraph(unit_id).len() != unit_id.len()
}

fn non_blank(text: &str) -> bool {
    !text.trim().is_empty()
}

fn string_at<'a>(value: &'a Value, path: &[&str]) -> Option<&'a str> {
    let mut cur = value;
    for key in path {
        cur = cur.get(key)?;
    }
    cur.as_str()
}

/// Parses one CORD-19 shaped JSON record.
///
/// Missing `abstract` or `body_text` sections give empty paragraph lists.
/// Entries whose text is blank are dropped.
pub fn parse_document(json_text: &str) -> Result<Document> {
    let value: Value =
        serde_json::from_str(json_text).map_err(|e| CorpusError::MalformedJson(e.to_string()))?;
    if !value.is_object() {
        return Err(CorpusError::MalformedJson("top-level value is not an object".into()));
    }
    let id = string_at(&value, &["paper_id"])
        .or_else(|| string_at(&value, &["id"]))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .ok_or(CorpusError::MissingId)?
        .to_string();
    let title = string_at(&value, &["metadata", "title"])
        .or_else(|| string_at(&value, &["title"]))
        .unwrap_or_default()
        .to_string();
    let url = string_at(&value, &["url"])
        .or_else(|| string_at(&value, &["metadata", "url"]))
        .map(str::to_string);

    let entries = |key: &str| -> Vec<&Value> {
        value
            .get(key)
            .and_then(Value::as_array)
            .map(|a| a.iter().collect())
            .unwrap_or_default()
    };

    let abstract_paragraphs = entries("abstract")
        .into_iter()
        .filter_map(|e| e.get("text").and_then(Value::as_str))
        .filter(|t| non_blank(t))
        .map(str::to_string)
        .collect();
    let body_paragraphs = entries("body_text")
        .into_iter()
        .filter_map(|e| {
            let text = e.get("text").and_then(Value::as_str)?;
            let section = e.get("section").and_then(Value::as_str).unwrap_or_default();
            Some(BodyParagraph {
                section: section.to_string(),
                text: text.to_string(),
            })
        })
        .filter(|b| non_blank(&b.text))
        .collect();

    Ok(Document {
        id,
        title,
        abstract_paragraphs,
        body_paragraphs,
        url,
    })
}

/// Abbreviations whose trailing period never ends a sentence.
const ABBREVIATIONS: &[&str] = &[
    "al", "approx", "ca", "cf", "dr", "e.g", "eq", "eqs", "et", "etc", "fig", "figs", "i.e", "inc",
    "mr", "mrs", "ms", "no", "nos", "prof", "ref", "refs", "resp", "sp", "spp", "st", "vs",
];

fn is_abbreviation(text: &str, period_at: usize) -> bool {
    let head = &text[..period_at];
    let word_start = head
        .rfind(|c: char| c.is_whitespace() || c == '(' || c == '[')
        .map_or(0, |p| p + 1);
    let word = head[word_start..].to_ascii_lowercase();
    ABBREVIATIONS.contains(&word.as_str())
}

/// Splits a paragraph into sentences.
///
/// A boundary is a `.`, `!` or `?` (optionally followed by closing quotes or
/// brackets) followed by whitespace and then an uppercase letter or digit.
/// Periods ending a listed abbreviation are not boundaries. Spans exclude
/// surrounding whitespace; text after the last boundary forms a final
/// sentence even without a terminator.
pub fn segment_sentences(paragraph: &Paragraph) -> Vec<Sentence> {
    let text = paragraph.text.as_str();
    let mut spans = Vec::new();
    let mut start = 0usize;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if matches!(c, '.' | '!' | '?') {
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '"' | '\'' | ')' | ']' | '\u{201d}') {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = k > j
                && k < chars.len()
                && (chars[k].1.is_uppercase() || chars[k].1.is_ascii_digit())
                && !(c == '.' && is_abbreviation(text, pos));
            if boundary {
                spans.push((start, end));
                start = chars[k].0;
                i = k;
                continue;
            }
        }
        i += 1;
    }
    spans.push((start, text.len()));

    spans
        .into_iter()
        .filter_map(|(s, e)| {
            let slice = &text[s..e];
            let lead = slice.len() - slice.trim_start().len();
            let trail = slice.len() - slice.trim_end().len();
            let (s, e) = (s + lead, e - trail);
            (s < e).then_some((s, e))
        })
        .enumerate()
        .map(|(ordinal, (s, e))| Sentence {
            id: sentence_id(&paragraph.id, ordinal),
            paragraph_id: paragraph.id.clone(),
            text: text[s..e].to_string(),
            start: s,
            end: e,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub documents: usize,
    pub paragraphs: usize,
    pub sentences: usize,
}

/// Immutable, id-sorted set of documents with their derived segmentation.
#[derive(Debug, Clone)]
pub struct CorpusStore {
    documents: Vec<Document>,
    paragraphs: Vec<Paragraph>,
    sentences: Vec<Sentence>,
}

impl CorpusStore {
    pub fn from_documents(mut documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = documents.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(CorpusError::DuplicateDocumentId(w[0].id.clone()));
        }
        let paragraphs: Vec<Paragraph> = documents.iter().flat_map(Document::paragraphs).collect();
        let sentences = paragraphs.par_iter().flat_map_iter(segment_sentences).collect();
        Ok(Self {
            documents,
            paragraphs,
            sentences,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn paragraphs(&self) -> &[Paragraph] {
        &self.paragraphs
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents
            .binary_search_by(|d| d.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.documents[i])
    }

    pub fn paragraph(&self, id: &str) -> Option<&Paragraph> {
        let doc_id = id.rsplit_once("#p")?.0;
        let doc_pos = self
            .documents
            .binary_search_by(|d| d.id.as_str().cmp(doc_id))
            .ok()?;
        let before: usize = self.documents[..doc_pos]
            .iter()
            .map(Document::paragraph_count)
            .sum();
        let ordinal: usize = id.rsplit_once("#p")?.1.parse().ok()?;
        (ordinal < self.documents[doc_pos].paragraph_count())
            .then(|| &self.paragraphs[before + ordinal])
    }

    pub fn stats(&self) -> IngestStats {
        IngestStats {
            documents: self.documents.len(),
            paragraphs: self.paragraphs.len(),
            sentences: self.sentences.len(),
        }
    }

    /// Writes `documents.jsonl` (one document per line, sorted by id) and
    /// `stats.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut out = BufWriter::new(fs::File::create(dir.join(DOCUMENTS_FILE))?);
        for doc in &self.documents {
            serde_json::to_writer(&mut out, doc).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        let stats = serde_json::to_string_pretty(&self.stats()).map_err(std::io::Error::from)?;
        fs::write(dir.join(STATS_FILE), stats + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(DOCUMENTS_FILE);
        let reader = BufReader::new(fs::File::open(&path)?);
        let mut documents = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let doc: Document = serde_json::from_str(&line).map_err(|e| CorpusError::InFile {
                path: path.clone(),
                source: Box::new(CorpusError::MalformedJson(e.to_string())),
            })?;
            documents.push(doc);
        }
        Self::from_documents(documents)
    }
}

/// Reads every `*.json` file in `input_dir` into a [`CorpusStore`].
pub fn ingest(input_dir: &Path) -> Result<(CorpusStore, IngestStats)> {
    let mut files: Vec<PathBuf> = fs::read_dir(input_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();

    let documents = files
        .par_iter()
        .map(|path| {
            let text = fs::read_to_string(path)?;
            parse_document(&text).map_err(|e| CorpusError::InFile {
                path: path.clone(),
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let store = CorpusStore::from_documents(documents)?;
    let stats = store.stats();
    Ok((store, stats))
}

/// Distinct document ids, for callers that only need membership.
pub fn document_ids(store: &CorpusStore) -> BTreeSet<&str> {
    store.documents.iter().map(|d| d.id.as_str()).collect()
}
