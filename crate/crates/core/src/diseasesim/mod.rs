//! Disease similarity from per-disease word embeddings.
//!
//! Each disease gets its own skip-gram model trained only on the paragraphs
//! that mention it. All models start from the same word-keyed
//! initialization, so the drift of a shared term away from its starting
//! point reflects the disease's contexts and distances between models are
//! comparable.

mod embed;
mod terms;
mod wmd;

pub use embed::{
    initial_vector,
    read_word2vec, train_disease_model, write_word2vec, DiseaseModel, EmbeddingConfig,
};
pub use terms::{extract_terms, sample_paragraphs, term_tokens, Term, TermList};
pub use wmd::{wmd, MAX_EXACT_BAG};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum DiseaseSimError {
    #[error("term extraction needs a non-empty paragraph sample")]
    EmptySample,
    #[error("no contexts to train the model for {0}")]
    EmptyContexts(String),
    #[error("term {0:?} is not covered by both models")]
    TermNotCovered(String),
    #[error("no term is covered by both models")]
    NoSharedTerms,
    #[error("bag of {size} terms exceeds the exact limit of {limit}")]
    BagTooLarge { size: usize, limit: usize },
    #[error("invalid bag weights: {0}")]
    InvalidWeights(String),
    #[error("malformed {what}: {message}")]
    Malformed { what: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DiseaseSimError>;

/// Distance between a term's representation in two models. Multi-token
/// terms use the mean of their token vectors.
pub fn term_distance(a: &DiseaseModel, b: &DiseaseModel, term: &str) -> Result<f64> {
    let not_covered = || DiseaseSimError::TermNotCovered(term.to_string());
    let u = a.term_vector(term).ok_or_else(not_covered)?;
    let v = b.term_vector(term).ok_or_else(not_covered)?;
    Ok(euclidean(&u, &v))
}

pub(crate) fn euclidean(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    /// Mean Euclidean distance between same-term vectors.
    #[default]
    Euclidean,
    /// Word Mover's Distance between the frequency-weighted term bags.
    Wmd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiseaseDistance {
    pub disease_a: String,
    pub disease_b: String,
    pub aggregate_mode: Aggregate,
    pub per_term: BTreeMap<String, f64>,
    pub aggregate: f64,
    pub compared_terms: usize,
    pub uncovered: Vec<String>,
}

/// Compares two disease models over the reference terms covered by both.
///
/// `per_term` always holds the same-term Euclidean distances. The aggregate
/// is their mean, or under [`Aggregate::Wmd`] the transport cost between the
/// covered terms weighted by corpus frequency, with cross-model Euclidean
/// ground distance.
pub fn compare_diseases(
    a: &DiseaseModel,
    b: &DiseaseModel,
    terms: &TermList,
    mode: Aggregate,
) -> Result<DiseaseDistance> {
    let mut covered = BTreeMap::new();
    let mut uncovered = Vec::new();
    for t in &terms.terms {
        match (a.term_vector(&t.term), b.term_vector(&t.term)) {
            (Some(u), Some(v)) => {
                covered.insert(t.term.clone(), (u, v, t.frequency as f64));
            }
            _ => uncovered.push(t.term.clone()),
        }
    }
    if covered.is_empty() {
        return Err(DiseaseSimError::NoSharedTerms);
    }
    uncovered.sort();
    let per_term: BTreeMap<String, f64> = covered
        .iter()
        .map(|(t, (u, v, _))| (t.clone(), euclidean(u, v)))
        .collect();
    let aggregate = match mode {
        Aggregate::Euclidean => per_term.values().sum::<f64>() / per_term.len() as f64,
        Aggregate::Wmd => {
            let total: f64 = covered.values().map(|x| x.2).sum();
            let bag_a: Vec<(&[f64], f64)> =
                covered.values().map(|(u, _, f)| (u.as_slice(), f / total)).collect();
            let bag_b: Vec<(&[f64], f64)> =
                covered.values().map(|(_, v, f)| (v.as_slice(), f / total)).collect();
            wmd(&bag_a, &bag_b, |u, v| euclidean(u, v))?
        }
    };
    Ok(DiseaseDistance {
        disease_a: a.disease.clone(),
        disease_b: b.disease.clone(),
        aggregate_mode: mode,
        compared_terms: per_term.len(),
        per_term,
        aggregate,
        uncovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(name: &str, vectors: &[(&str, [f64; 2])]) -> DiseaseModel {
        DiseaseModel::from_vectors(
            name,
            EmbeddingConfig { dim: 2, ..Default::default() },
            vectors.iter().map(|(w, v)| (w.to_string(), v.to_vec())).collect(),
        )
    }

    fn terms(list: &[(&str, u64)]) -> TermList {
        TermList {
            terms: list
                .iter()
                .map(|(t, f)| Term { term: t.to_string(), frequency: *f })
                .collect(),
        }
    }

    #[test]
    fn term_distance_hand_values() {
        let a = model("A", &[("x", [0.0, 0.0])]);
        let b = model("B", &[("x", [3.0, 4.0])]);
        assert_eq!(term_distance(&a, &b, "x").unwrap(), 5.0);
        assert_eq!(term_distance(&b, &a, "x").unwrap(), 5.0);
        assert!(matches!(term_distance(&a, &b, "y"), Err(DiseaseSimError::TermNotCovered(_))));
    }

    #[test]
    fn aggregate_is_mean_of_covered_terms() {
        let a = model("A", &[("x", [0.0, 0.0]), ("y", [1.0, 1.0]), ("z", [0.0, 0.0])]);
        let b = model("B", &[("x", [3.0, 4.0]), ("y", [1.0, 2.0])]);
        let list = terms(&[("x", 5), ("y", 3), ("z", 1)]);
        let d = compare_diseases(&a, &b, &list, Aggregate::Euclidean).unwrap();
        assert_eq!(d.aggregate, 3.0);
        assert_eq!(d.compared_terms, 2);
        assert_eq!(d.uncovered, vec!["z".to_string()]);
        let self_d = compare_diseases(&a, &a, &list, Aggregate::Wmd).unwrap();
        assert_eq!(self_d.aggregate, 0.0);
    }

    #[test]
    fn aggregates_ignore_term_order() {
        let a = model("A", &[("x", [0.0, 1.0]), ("y", [1.0, 1.0]), ("w", [2.0, 0.5])]);
        let b = model("B", &[("x", [3.0, 4.0]), ("y", [1.0, 2.0]), ("w", [0.0, 0.0])]);
        let fwd = terms(&[("x", 5), ("y", 3), ("w", 2)]);
        let rev = terms(&[("w", 2), ("y", 3), ("x", 5)]);
        for mode in [Aggregate::Euclidean, Aggregate::Wmd] {
            let d1 = compare_diseases(&a, &b, &fwd, mode).unwrap();
            let d2 = compare_diseases(&a, &b, &rev, mode).unwrap();
            assert_eq!(d1.aggregate, d2.aggregate);
        }
    }

    #[test]
    fn no_shared_terms() {
        let a = model("A", &[("x", [0.0, 0.0])]);
        let b = model("B", &[("y", [0.0, 0.0])]);
        assert!(matches!(
            compare_diseases(&a, &b, &terms(&[("x", 1), ("y", 1)]), Aggregate::Euclidean),
            Err(DiseaseSimError::NoSharedTerms)
        ));
    }
}
