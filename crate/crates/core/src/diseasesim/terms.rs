use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{DiseaseSimError, Result};
use crate::rng;
use crate::text::is_stopword;

const MAX_NGRAM: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub term: String,
    pub frequency: u64,
}

/// Reference terms ordered by frequency descending, then lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermList {
    pub terms: Vec<Term>,
}

impl TermList {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let malformed = |e: csv::Error| DiseaseSimError::Malformed {
            what: "terms.csv".into(),
            message: e.to_string(),
        };
        w.write_record(["term", "frequency"]).map_err(malformed)?;
        for t in &self.terms {
            w.write_record([t.term.as_str(), &t.frequency.to_string()])
                .map_err(malformed)?;
        }
        let bytes = w.into_inner().map_err(|e| malformed(e.into_error().into()))?;
        std::fs::File::create(path)?.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let malformed = |message: String| DiseaseSimError::Malformed {
            what: path.display().to_string(),
            message,
        };
        let mut r = csv::Reader::from_path(path).map_err(|e| malformed(e.to_string()))?;
        let terms = r
            .deserialize::<Term>()
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| malformed(e.to_string()))?;
        Ok(Self { terms })
    }
}

/// Splits text into term segments: runs of lowercase alphabetic tokens that
/// are not interrupted by punctuation or by tokens with digits or symbols.
fn segments(text: &str) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for raw in text.split_whitespace() {
        let core = raw.trim_matches(|c: char| !c.is_alphanumeric());
        let leading = raw.starts_with(|c: char| !c.is_alphanumeric());
        let trailing = raw.ends_with(|c: char| !c.is_alphanumeric());
        if leading && !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
        if !core.is_empty() && core.chars().all(char::is_alphabetic) {
            current.push(core.to_lowercase());
        } else if !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
        if trailing && !current.is_empty() {
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

/// Tokens of a term as they are looked up in an embedding vocabulary.
pub fn term_tokens(term: &str) -> Vec<&str> {
    term.split_whitespace().collect()
}

/// Most frequent 1–3-gram terms of a paragraph sample. Terms never start or
/// end with a stopword and never span punctuation.
pub fn extract_terms<S: AsRef<str>>(paragraphs: &[S], n: usize) -> Result<TermList> {
    if paragraphs.is_empty() {
        return Err(DiseaseSimError::EmptySample);
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for p in paragraphs {
        for seg in segments(p.as_ref()) {
            for start in 0..seg.len() {
                if is_stopword(&seg[start]) {
                    continue;
                }
                for end in start + 1..=(start + MAX_NGRAM).min(seg.len()) {
                    if !is_stopword(&seg[end - 1]) {
                        *counts.entry(seg[start..end].join(" ")).or_default() += 1;
                    }
                }
            }
        }
    }
    let mut terms: Vec<Term> = counts
        .into_iter()
        .map(|(term, frequency)| Term { term, frequency })
        .collect();
    terms.sort_by(|a, b| b.frequency.cmp(&a.frequency).then_with(|| a.term.cmp(&b.term)));
    terms.truncate(n);
    Ok(TermList { terms })
}

/// Seeded uniform sample of `n` items without replacement, kept in input
/// order. Returns everything when `n` is at least the population.
pub fn sample_paragraphs<T: Clone>(items: &[T], n: usize, seed: u64) -> Vec<T> {
    if n >= items.len() {
        return items.to_vec();
    }
    let mut picked = index::sample(&mut rng::seeded(seed), items.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn as_pairs(list: &TermList) -> Vec<(&str, u64)> {
        list.terms.iter().map(|t| (t.term.as_str(), t.frequency)).collect()
    }

    #[test]
    fn bigram_beats_stopwords() {
        let list = extract_terms(&["The T cell activation. The T cell response."], 100).unwrap();
        let pairs = as_pairs(&list);
        assert!(pairs.iter().all(|(t, _)| !t.starts_with("the")));
        let bigrams: Vec<_> = pairs.iter().filter(|(t, _)| t.split(' ').count() == 2).collect();
        assert_eq!(*bigrams[0], ("t cell", 2));
        assert!(!pairs.iter().any(|(t, _)| *t == "activation the"));
        assert!(pairs.contains(&("t cell activation", 1)));
    }

    #[test]
    fn ordering_and_filters() {
        let list =
            extract_terms(&["viral load, viral load of covid-19 in 2020", "viral shedding"], 10)
                .unwrap();
        assert_eq!(
            as_pairs(&list),
            vec![
                ("viral", 3),
                ("load", 2),
                ("viral load", 2),
                ("shedding", 1),
                ("viral shedding", 1)
            ]
        );
    }

    #[test]
    fn truncation_and_empty() {
        assert_eq!(extract_terms(&["alpha beta"], 1).unwrap().len(), 1);
        assert_eq!(extract_terms(&["alpha beta"], 50).unwrap().len(), 3);
        let none: [&str; 0] = [];
        assert!(matches!(extract_terms(&none, 5), Err(DiseaseSimError::EmptySample)));
    }

    #[test]
    fn sampling_is_seeded() {
        let items: Vec<u32> = (0..100).collect();
        let a = sample_paragraphs(&items, 10, 1);
        assert_eq!(a, sample_paragraphs(&items, 10, 1));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_paragraphs(&items, 200, 1).len(), 100);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let list = extract_terms(&["a \"quoted\" term, and more"], 10).unwrap();
        let path = dir.path().join("terms.csv");
        list.write_csv(&path).unwrap();
        assert_eq!(TermList::read_csv(&path).unwrap(), list);
    }
}
