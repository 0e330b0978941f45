use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{term_tokens, DiseaseSimError, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: usize,
    pub learning_rate: f64,
    /// Keys the word-level initial vectors shared by every disease model.
    pub init_seed: u64,
    /// Drives negative sampling.
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 1,
            learning_rate: 0.025,
            init_seed: 1,
            seed: 1,
        }
    }
}

/// Word vectors of one disease.
#[derive(Debug, Clone, PartialEq)]
pub struct DiseaseModel {
    pub disease: String,
    pub config: EmbeddingConfig,
    words: Vec<String>,
    index: HashMap<String, usize>,
    vectors: Vec<Vec<f64>>,
}

/// Starting vector of `word`: uniform in (-0.5/dim, 0.5/dim), a function of
/// the word and `init_seed` only.
pub fn initial_vector(word: &str, dim: usize, init_seed: u64) -> Vec<f64> {
    let seed = rng::fnv1a(word.as_bytes()) ^ init_seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut r = rng::seeded(seed);
    (0..dim).map(|_| (r.random::<f64>() - 0.5) / dim as f64).collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl DiseaseModel {
    pub fn from_vectors(disease: &str, config: EmbeddingConfig, vectors: Vec<(String, Vec<f64>)>) -> Self {
        let (words, vectors): (Vec<String>, Vec<Vec<f64>>) = vectors.into_iter().unzip();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Self {
            disease: disease.to_string(),
            config,
            words,
            index,
            vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn vector(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.vectors[i].as_slice())
    }

    /// Mean of the term's token vectors; `None` when any token is missing.
    pub fn term_vector(&self, term: &str) -> Option<Vec<f64>> {
        let tokens = term_tokens(term);
        if tokens.is_empty() {
            return None;
        }
        let mut sum = vec![0.0; self.dim()];
        for t in &tokens {
            let v = self.vector(t)?;
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
        let n = tokens.len() as f64;
        Some(sum.into_iter().map(|x| x / n).collect())
    }
}

/// Skip-gram with negative sampling over the contexts of one disease.
///
/// Vocabulary is ordered by frequency descending then lexicographically.
/// Input vectors start at [`initial_vector`] unless `pretrained` covers the
/// word (with matching dimension); output vectors start at zero. The
/// learning rate decays linearly to 1e-4 of its initial value.
pub fn train_disease_model(
    disease: &str,
    contexts: &[Vec<String>],
    config: &EmbeddingConfig,
    pretrained: Option<&HashMap<String, Vec<f64>>>,
) -> Result<DiseaseModel> {
    if contexts.iter().all(Vec::is_empty) {
        return Err(DiseaseSimError::EmptyContexts(disease.to_string()));
    }
    let dim = config.dim;
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for tok in contexts.iter().flatten() {
        *freq.entry(tok.as_str()).or_default() += 1;
    }
    let mut vocab: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|&(_, c)| c >= config.min_count.max(1) as u64)
        .collect();
    if vocab.is_empty() {
        return Err(DiseaseSimError::EmptyContexts(disease.to_string()));
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();

    let mut input: Vec<Vec<f64>> = vocab
        .iter()
        .map(|(w, _)| match pretrained.and_then(|p| p.get(*w)) {
            Some(v) if v.len() == dim => v.clone(),
            _ => initial_vector(w, dim, config.init_seed),
        })
        .collect();

    if config.epochs > 0 {
        let mut output = vec![vec![0.0; dim]; vocab.len()];
        let noise = WeightedIndex::new(vocab.iter().map(|(_, c)| (*c as f64).powf(0.75)))
            .expect("positive unigram weights");
        let sentences: Vec<Vec<usize>> = contexts
            .iter()
            .map(|c| c.iter().filter_map(|t| index.get(t.as_str()).copied()).collect())
            .collect();
        let total_steps = (config.epochs * sentences.iter().map(Vec::len).sum::<usize>()).max(1);
        let mut step = 0usize;
        let mut r = rng::seeded(config.seed);
        let mut grad = vec![0.0; dim];
        for _ in 0..config.epochs {
            for sentence in &sentences {
                for (pos, &center) in sentence.iter().enumerate() {
                    let lr = config.learning_rate
                        * (1.0 - step as f64 / total_steps as f64).max(1e-4);
                    step += 1;
                    let lo = pos.saturating_sub(config.window);
                    let hi = (pos + config.window + 1).min(sentence.len());
                    for (cpos, &context) in sentence.iter().enumerate().take(hi).skip(lo) {
                        if cpos == pos {
                            continue;
                        }
                        grad.iter_mut().for_each(|g| *g = 0.0);
                        for d in 0..=config.negatives {
                            let (target, label) = if d == 0 {
                                (context, 1.0)
                            } else {
                                let t = noise.sample(&mut r);
                                if t == context {
                                    continue;
                                }
                                (t, 0.0)
                            };
                            let v = &input[center];
                            let u = &mut output[target];
                            let dot: f64 = v.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
                            let g = (label - sigmoid(dot)) * lr;
                            for k in 0..dim {
                                grad[k] += g * u[k];
                                u[k] += g * v[k];
                            }
                        }
                        input[center].iter_mut().zip(&grad).for_each(|(x, g)| *x += g);
                    }
                }
            }
        }
    }

    Ok(DiseaseModel::from_vectors(
        disease,
        *config,
        vocab.iter().map(|(w, _)| w.to_string()).zip(input).collect(),
    ))
}

/// Writes vectors in word2vec text format: a `V D` header line followed by
/// one `word f1 ... fD` line per word, in vocabulary order.
pub fn write_word2vec(model: &DiseaseModel, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{} {}", model.words.len(), model.dim())?;
    for (word, v) in model.words.iter().zip(&model.vectors) {
        write!(w, "{word}")?;
        for x in v {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a word2vec text file into ordered (word, vector) pairs.
pub fn read_word2vec(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let malformed = |line: usize, message: &str| DiseaseSimError::Malformed {
        what: format!("{}:{line}", path.display()),
        message: message.to_string(),
    };
    let mut lines = BufReader::new(std::fs::File::open(path)?).lines();
    let header = lines.next().ok_or_else(|| malformed(1, "missing header"))??;
    let mut parts = header.split_whitespace().map(str::parse::<usize>);
    let (Some(Ok(count)), Some(Ok(dim)), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(malformed(1, "header must be `V D`"));
    };
    let mut out = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line").to_string();
        let v = fields
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| malformed(i + 2, &e.to_string()))?;
        if v.len() != dim {
            return Err(malformed(i + 2, &format!("expected {dim} values, got {}", v.len())));
        }
        out.push((word, v));
    }
    if out.len() != count {
        return Err(malformed(1, &format!("header declares {count} words, found {}", out.len())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contexts(texts: &[&str]) -> Vec<Vec<String>> {
        texts.iter().map(|t| crate::text::words(t)).collect()
    }

    fn config(epochs: usize) -> EmbeddingConfig {
        EmbeddingConfig {
            dim: 16,
            epochs,
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_keep_initialization() {
        let m = train_disease_model("D1", &contexts(&["fever and cough"]), &config(0), None).unwrap();
        for w in m.words() {
            assert_eq!(m.vector(w).unwrap(), initial_vector(w, 16, 1).as_slice());
        }
    }

    #[test]
    fn training_moves_vectors_deterministically() {
        let ctx = contexts(&["fever cough fatigue fever cough", "cough fever pneumonia"]);
        let a = train_disease_model("D1", &ctx, &config(3), None).unwrap();
        let b = train_disease_model("D1", &ctx, &config(3), None).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.vector("fever").unwrap(), initial_vector("fever", 16, 1).as_slice());
        assert_eq!(a.words()[0], "cough");
    }

    #[test]
    fn pretrained_overrides_initialization() {
        let mut pre = HashMap::new();
        pre.insert("fever".to_string(), vec![0.25; 16]);
        pre.insert("cough".to_string(), vec![1.0; 3]);
        let m = train_disease_model("D1", &contexts(&["fever cough"]), &config(0), Some(&pre))
            .unwrap();
        assert_eq!(m.vector("fever").unwrap(), &[0.25; 16]);
        assert_eq!(m.vector("cough").unwrap(), initial_vector("cough", 16, 1).as_slice());
    }

    #[test]
    fn empty_contexts_rejected() {
        assert!(matches!(
            train_disease_model("D1", &[vec![]], &config(1), None),
            Err(DiseaseSimError::EmptyContexts(_))
        ));
    }

    #[test]
    fn term_vector_is_token_mean() {
        let m = DiseaseModel::from_vectors(
            "D",
            EmbeddingConfig { dim: 2, ..Default::default() },
            vec![("t".into(), vec![0.0, 2.0]), ("cell".into(), vec![2.0, 0.0])],
        );
        assert_eq!(m.term_vector("t cell").unwrap(), vec![1.0, 1.0]);
        assert!(m.term_vector("b cell").is_none());
    }

    #[test]
    fn word2vec_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("D1.vec");
        let m = train_disease_model("D1", &contexts(&["fever cough fever"]), &config(2), None)
            .unwrap();
        write_word2vec(&m, &path).unwrap();
        let back = DiseaseModel::from_vectors("D1", m.config, read_word2vec(&path).unwrap());
        assert_eq!(back, m);
        std::fs::write(&path, "2 3\nx 1 2 3\n").unwrap();
        assert!(read_word2vec(&path).is_err());
    }
}
