//! Substance-aligned topic model and topic-space document similarity.
//!
//! Training is collapsed Gibbs sampling with a labeled-topic constraint:
//! a paragraph's tokens may only be assigned to the topics of the
//! substances it mentions plus one shared background topic. Documents are
//! then compared through hierarchical hashes of their topic distributions,
//! with candidates reranked by Jensen-Shannon divergence.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng;

pub const MODEL_FILE: &str = "model.json";
pub const PHI_FILE: &str = "phi.bin";
pub const THETA_FILE: &str = "theta.jsonl";

/// Label of the extra topic that absorbs vocabulary unrelated to substances.
pub const BACKGROUND_LABEL: &str = "background";

/// Slack when comparing cumulative mass against a hashing threshold.
const MASS_EPS: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum TopicError {
    #[error("need at least 2 distinct substance labels, found {0}")]
    InsufficientLabels(usize),
    #[error("paragraph {0} has no tokens")]
    EmptyParagraph(usize),
    #[error("unknown topic {0}")]
    UnknownTopic(usize),
    #[error("no in-vocabulary tokens left after filtering")]
    EmptyAfterFiltering,
    #[error("unknown unit {0:?}")]
    UnknownUnit(String),
    #[error("malformed model artifact: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TopicError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HashThresholds {
    pub first: f64,
    pub second: f64,
}

impl Default for HashThresholds {
    fn default() -> Self {
        Self {
            first: 0.5,
            second: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TopicConfig {
    /// Document-topic prior; `None` means `50 / K`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub inference_iterations: usize,
    pub hash_thresholds: HashThresholds,
}

impl Default for TopicConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            seed: 42,
            inference_iterations: 100,
            hash_thresholds: HashThresholds::default(),
        }
    }
}

/// Training unit: bag of tokens plus the substance codes it mentions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledParagraph {
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelMeta {
    topics: usize,
    vocabulary: Vec<String>,
    topic_labels: Vec<String>,
    alpha: f64,
    config: TopicConfig,
}

#[derive(Debug, Clone)]
pub struct TopicModel {
    vocabulary: Vec<String>,
    word_index: HashMap<String, u32>,
    /// Row-major `K x V`.
    phi: Vec<f64>,
    topic_labels: Vec<String>,
    alpha: f64,
    config: TopicConfig,
}

pub fn train_topic_model(paragraphs: &[LabeledParagraph], config: &TopicConfig) -> Result<TopicModel> {
    let substances: BTreeSet<&str> = paragraphs
        .iter()
        .flat_map(|p| p.labels.iter().map(String::as_str))
        .collect();
    if substances.len() < 2 {
        return Err(TopicError::InsufficientLabels(substances.len()));
    }
    if let Some(i) = paragraphs.iter().position(|p| p.tokens.is_empty()) {
        return Err(TopicError::EmptyParagraph(i));
    }

    let mut topic_labels: Vec<String> = substances.iter().map(|s| s.to_string()).collect();
    topic_labels.push(BACKGROUND_LABEL.to_string());
    let k = topic_labels.len();
    let background = k - 1;
    let topic_of: HashMap<&str, usize> = substances.iter().enumerate().map(|(i, s)| (*s, i)).collect();

    let vocabulary: Vec<String> = paragraphs
        .iter()
        .flat_map(|p| p.tokens.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let word_index: HashMap<String, u32> = vocabulary
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), i as u32))
        .collect();
    let v = vocabulary.len();

    let docs: Vec<Vec<usize>> = paragraphs
        .iter()
        .map(|p| p.tokens.iter().map(|t| word_index[t] as usize).collect())
        .collect();
    let admissible: Vec<Vec<usize>> = paragraphs
        .iter()
        .map(|p| {
            let mut topics: Vec<usize> = p.labels.iter().map(|l| topic_of[l.as_str()]).collect();
            topics.push(background);
            topics.sort_unstable();
            topics.dedup();
            topics
        })
        .collect();

    let alpha = config.alpha.unwrap_or(50.0 / k as f64);
    let beta = config.beta;
    let v_beta = v as f64 * beta;
    let mut rng = rng::seeded(config.seed);

    let mut n_dk = vec![vec![0u32; k]; docs.len()];
    let mut n_kw = vec![0u32; k * v];
    let mut n_k = vec![0u32; k];
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(docs.len());
    for (d, words) in docs.iter().enumerate() {
        let adm = &admissible[d];
        let assignments: Vec<usize> = words
            .iter()
            .map(|&w| {
                let t = adm[rng.random_range(0..adm.len())];
                n_dk[d][t] += 1;
                n_kw[t * v + w] += 1;
                n_k[t] += 1;
                t
            })
            .collect();
        z.push(assignments);
    }

    let mut weights = vec![0.0f64; k];
    for _ in 0..config.iterations {
        for (d, words) in docs.iter().enumerate() {
            let adm = &admissible[d];
            for (i, &w) in words.iter().enumerate() {
                let old = z[d][i];
                n_dk[d][old] -= 1;
                n_kw[old * v + w] -= 1;
                n_k[old] -= 1;

                let mut total = 0.0;
                for (slot, &t) in adm.iter().enumerate() {
                    let p = (f64::from(n_dk[d][t]) + alpha) * (f64::from(n_kw[t * v + w]) + beta)
                        / (f64::from(n_k[t]) + v_beta);
                    total += p;
                    weights[slot] = total;
                }
                let u = rng.random::<f64>() * total;
                let slot = weights[..adm.len()]
                    .iter()
                    .position(|&c| u < c)
                    .unwrap_or(adm.len() - 1);
                let new = adm[slot];

                z[d][i] = new;
                n_dk[d][new] += 1;
                n_kw[new * v + w] += 1;
                n_k[new] += 1;
            }
        }
    }

    let mut phi = vec![0.0f64; k * v];
    for t in 0..k {
        let denom = f64::from(n_k[t]) + v_beta;
        let row = &mut phi[t * v..(t + 1) * v];
        for (w, cell) in row.iter_mut().enumerate() {
            *cell = (f64::from(n_kw[t * v + w]) + beta) / denom;
        }
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= sum);
    }

    Ok(TopicModel {
        vocabulary,
        word_index,
        phi,
        topic_labels,
        alpha,
        config: config.clone(),
    })
}

impl TopicModel {
    pub fn num_topics(&self) -> usize {
        self.topic_labels.len()
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn topic_labels(&self) -> &[String] {
        &self.topic_labels
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn config(&self) -> &TopicConfig {
        &self.config
    }

    /// Topic index of a substance code.
    pub fn topic_for_label(&self, label: &str) -> Option<usize> {
        self.topic_labels.iter().position(|l| l == label)
    }

    pub fn phi_row(&self, topic: usize) -> Result<&[f64]> {
        let v = self.vocabulary.len();
        if topic >= self.num_topics() {
            return Err(TopicError::UnknownTopic(topic));
        }
        Ok(&self.phi[topic * v..(topic + 1) * v])
    }

    pub fn phi(&self, topic: usize, word: &str) -> Option<f64> {
        let w = *self.word_index.get(word)? as usize;
        self.phi_row(topic).ok().map(|row| row[w])
    }

    /// The `n` most probable words of a topic, ties broken lexicographically.
    pub fn topic_top_words(&self, topic: usize, n: usize) -> Result<Vec<(String, f64)>> {
        let row = self.phi_row(topic)?;
        let mut order: Vec<usize> = (0..row.len()).collect();
        order.sort_by(|&a, &b| {
            row[b]
                .total_cmp(&row[a])
                .then_with(|| self.vocabulary[a].cmp(&self.vocabulary[b]))
        });
        Ok(order
            .into_iter()
            .take(n)
            .map(|w| (self.vocabulary[w].clone(), row[w]))
            .collect())
    }

    /// Fold-in Gibbs sampling with `phi` held fixed.
    ///
    /// Out-of-vocabulary tokens are ignored. The sampler is seeded from the
    /// model seed only, so equal inputs give bit-identical output. `theta` is
    /// the average of the per-sweep estimates over the second half of the run.
    pub fn infer(&self, tokens: &[String]) -> Result<Vec<f64>> {
        let words: Vec<usize> = tokens
            .iter()
            .filter_map(|t| self.word_index.get(t).map(|&w| w as usize))
            .collect();
        if words.is_empty() {
            return Err(TopicError::EmptyAfterFiltering);
        }
        let k = self.num_topics();
        let v = self.vocabulary.len();
        let alpha = self.alpha;
        let mut rng = rng::seeded(self.config.seed ^ 0x5eed_f01d_0000_0001);

        let mut n_k = vec![0u32; k];
        let mut z: Vec<usize> = words
            .iter()
            .map(|_| {
                let t = rng.random_range(0..k);
                n_k[t] += 1;
                t
            })
            .collect();

        let iterations = self.config.inference_iterations.max(2);
        let burn_in = iterations / 2;
        let mut acc = vec![0.0f64; k];
        let mut weights = vec![0.0f64; k];
        let denom = words.len() as f64 + k as f64 * alpha;
        for it in 0..iterations {
            for (i, &w) in words.iter().enumerate() {
                n_k[z[i]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    total += (f64::from(n_k[t]) + alpha) * self.phi[t * v + w];
                    weights[t] = total;
                }
                let u = rng.random::<f64>() * total;
                let t = weights.iter().position(|&c| u < c).unwrap_or(k - 1);
                z[i] = t;
                n_k[t] += 1;
            }
            if it >= burn_in {
                for t in 0..k {
                    acc[t] += (f64::from(n_k[t]) + alpha) / denom;
                }
            }
        }
        let sum: f64 = acc.iter().sum();
        Ok(acc.into_iter().map(|x| x / sum).collect())
    }

    pub fn infer_distribution(&self, unit_id: &str, tokens: &[String]) -> Result<TopicDistribution> {
        Ok(TopicDistribution {
            unit_id: unit_id.to_string(),
            theta: self.infer(tokens)?,
        })
    }

    /// Writes `model.json` and `phi.bin` (row-major little-endian `f64`).
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let meta = ModelMeta {
            topics: self.num_topics(),
            vocabulary: self.vocabulary.clone(),
            topic_labels: self.topic_labels.clone(),
            alpha: self.alpha,
            config: self.config.clone(),
        };
        let json = serde_json::to_string_pretty(&meta).map_err(std::io::Error::from)?;
        fs::write(dir.join(MODEL_FILE), json + "\n")?;
        let bytes: Vec<u8> = self.phi.iter().flat_map(|x| x.to_le_bytes()).collect();
        fs::write(dir.join(PHI_FILE), bytes)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta: ModelMeta = serde_json::from_str(&fs::read_to_string(dir.join(MODEL_FILE))?)
            .map_err(|e| TopicError::Malformed(e.to_string()))?;
        let bytes = fs::read(dir.join(PHI_FILE))?;
        let expected = meta.topics * meta.vocabulary.len() * 8;
        if bytes.len() != expected || meta.topic_labels.len() != meta.topics {
            return Err(TopicError::Malformed(format!(
                "phi.bin has {} bytes, expected {expected}",
                bytes.len()
            )));
        }
        let phi = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let word_index = meta
            .vocabulary
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Ok(Self {
            vocabulary: meta.vocabulary,
            word_index,
            phi,
            topic_labels: meta.topic_labels,
            alpha: meta.alpha,
            config: meta.config,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicDistribution {
    pub unit_id: String,
    pub theta: Vec<f64>,
}

/// Topic ids grouped by relevance; level 0 is the most relevant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicHash {
    pub levels: Vec<Vec<usize>>,
}

impl TopicHash {
    pub fn level0(&self) -> &[usize] {
        &self.levels[0]
    }
}

/// Topic ids ordered by probability descending, lower id first on ties.
pub fn ranked_topics(theta: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]).then(a.cmp(&b)));
    order
}

/// Density-based hierarchical hash of a topic distribution.
///
/// Level 0 is the smallest ranked prefix holding `first` of the mass, level
/// 1 extends it until `second` is reached, and level 2 keeps the remaining
/// topics above the uniform floor `1/K`.
pub fn hash_distribution(theta: &[f64], thresholds: HashThresholds) -> TopicHash {
    let floor = 1.0 / theta.len() as f64;
    let mut levels = vec![Vec::new(), Vec::new(), Vec::new()];
    let mut cum = 0.0;
    for t in ranked_topics(theta) {
        if levels[0].is_empty() || cum < thresholds.first - MASS_EPS {
            levels[0].push(t);
        } else if cum < thresholds.second - MASS_EPS {
            levels[1].push(t);
        } else if theta[t] > floor {
            levels[2].push(t);
        }
        cum += theta[t];
    }
    for level in &mut levels {
        level.sort_unstable();
    }
    TopicHash { levels }
}

/// Jensen-Shannon divergence in nats; bounded by `ln 2`.
pub fn jensen_shannon(p: &[f64], q: &[f64]) -> f64 {
    let mut js = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        let m = 0.5 * (a + b);
        let kl = |x: f64| if x > 0.0 { 0.5 * x * (x / m).ln() } else { 0.0 };
        // One addition per coordinate keeps the result exactly symmetric.
        js += kl(a) + kl(b);
    }
    js.max(0.0)
}

/// Hashed topic distributions with an inverted index over level-0 topics.
#[derive(Debug, Clone)]
pub struct TopicIndex {
    units: Vec<TopicDistribution>,
    hashes: Vec<TopicHash>,
    by_id: HashMap<String, usize>,
    postings: Vec<Vec<usize>>,
}

impl TopicIndex {
    pub fn new(units: Vec<TopicDistribution>, thresholds: HashThresholds) -> Self {
        let k = units.first().map_or(0, |u| u.theta.len());
        let hashes: Vec<TopicHash> = units
            .iter()
            .map(|u| hash_distribution(&u.theta, thresholds))
            .collect();
        let mut postings = vec![Vec::new(); k];
        for (i, h) in hashes.iter().enumerate() {
            for &t in h.level0() {
                postings[t].push(i);
            }
        }
        let by_id = units
            .iter()
            .enumerate()
            .map(|(i, u)| (u.unit_id.clone(), i))
            .collect();
        Self {
            units,
            hashes,
            by_id,
            postings,
        }
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn units(&self) -> &[TopicDistribution] {
        &self.units
    }

    pub fn hash(&self, unit_id: &str) -> Option<&TopicHash> {
        self.by_id.get(unit_id).map(|&i| &self.hashes[i])
    }

    /// Approximate neighbours: units whose level-0 topics intersect the
    /// query's level-0 topics, ranked by Jensen-Shannon divergence.
    pub fn similar_documents(&self, unit_id: &str, k: usize) -> Result<Vec<(String, f64)>> {
        let &q = self
            .by_id
            .get(unit_id)
            .ok_or_else(|| TopicError::UnknownUnit(unit_id.to_string()))?;
        let mut candidates: Vec<usize> = self.hashes[q]
            .level0()
            .iter()
            .flat_map(|&t| self.postings[t].iter().copied())
            .filter(|&i| i != q)
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        let query = &self.units[q].theta;
        let mut scored: Vec<(String, f64)> = candidates
            .into_iter()
            .map(|i| {
                (
                    self.units[i].unit_id.clone(),
                    jensen_shannon(query, &self.units[i].theta),
                )
            })
            .collect();
        scored.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }
}

/// Node of the topic explorer trie; children are keyed by topic id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExplorerNode {
    pub children: BTreeMap<usize, ExplorerNode>,
    pub units: Vec<String>,
}

impl ExplorerNode {
    pub fn unit_count(&self) -> usize {
        self.units.len() + self.children.values().map(ExplorerNode::unit_count).sum::<usize>()
    }

    pub fn leaves(&self) -> Vec<&ExplorerNode> {
        if self.children.is_empty() {
            return vec![self];
        }
        self.children.values().flat_map(ExplorerNode::leaves).collect()
    }
}

/// Trie over the top-`depth` ranked topics of every unit.
pub fn explorer_tree(units: &[TopicDistribution], depth: usize) -> ExplorerNode {
    let mut root = ExplorerNode::default();
    for unit in units {
        let mut node = &mut root;
        for t in ranked_topics(&unit.theta).into_iter().take(depth) {
            node = node.children.entry(t).or_default();
        }
        node.units.push(unit.unit_id.clone());
    }
    root
}

pub fn write_theta_jsonl(path: &Path, dists: &[TopicDistribution]) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for d in dists {
        serde_json::to_writer(&mut out, d).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_theta_jsonl(path: &Path) -> Result<Vec<TopicDistribution>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line).map_err(|e| TopicError::Malformed(e.to_string()))?);
        }
    }
    Ok(out)
}
