//! Seeded synthetic inputs shared by the test suites.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const WORD_POOL: &[&str] = &[
    "amoxa", "borex", "cilan", "dorin", "ebrat", "fusal", "gemox", "hylon", "iravel", "jomib",
    "kotra", "lumen", "mavir", "nexol", "ostra", "pivan", "quera", "rilox", "sunat", "tovir",
    "ulmex", "vabra", "wexil", "xaron", "yplin", "zomat", "acid", "sodium", "chloride", "type",
    "anti-viral", "co-trimox", "lopi/rito", "café", "naïve", "ß-lact", "2b", "h1n1", "alpha", "beta",
];

const FILLER: &[&str] = &[
    "the", "patients", "were", "treated", "with", "and", "showed", "no", "response", "to",
    "in", "trial", "dose", "of", "mg", "daily", "Über", "résumé", "x", "42",
];

const SEPARATORS: &[&str] = &[" ", " ", " ", ", ", ". ", " (", ") ", "; ", "-", "/", "  ", "\n", " – "];

/// `n` gazetteer entries `(surface, code)` of 1 to 3 pool words, with
/// distinct case-folded surfaces. Codes are MeSH-shaped.
pub fn gazetteer_entries(rng: &mut impl Rng, n: usize) -> Vec<(String, String)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let len = rng.random_range(1..=3);
        let words: Vec<&str> = (0..len).map(|_| *WORD_POOL.choose(rng).unwrap()).collect();
        let surface = words.join(" ");
        if seen.insert(surface.to_lowercase()) {
            out.push((surface, format!("D{:06}", out.len() + 1)));
        }
    }
    out
}

fn recase(rng: &mut impl Rng, s: &str) -> String {
    match rng.random_range(0..4) {
        0 => s.to_uppercase(),
        1 => s
            .chars()
            .map(|c| if rng.random_bool(0.5) { c.to_uppercase().collect::<String>() } else { c.to_string() })
            .collect(),
        _ => s.to_string(),
    }
}

/// Random text of at least `min_bytes` mixing gazetteer surfaces, pool
/// words and filler under assorted separators and casing.
pub fn ner_text(rng: &mut impl Rng, entries: &[(String, String)], min_bytes: usize) -> String {
    let mut text = String::new();
    while text.len() < min_bytes {
        let piece = match rng.random_range(0..10) {
            0..=3 => {
                let surface = entries.choose(rng).unwrap().0.clone();
                recase(rng, &surface)
            }
            4..=6 => {
                let word = *WORD_POOL.choose(rng).unwrap();
                recase(rng, word)
            }
            _ => FILLER.choose(rng).unwrap().to_string(),
        };
        text.push_str(&piece);
        text.push_str(SEPARATORS.choose(rng).unwrap());
    }
    text
}

/// A labeled corpus with one planted vocabulary per substance.
pub struct PlantedCorpus {
    pub paragraphs: Vec<(Vec<String>, Vec<String>)>,
    pub vocab: BTreeMap<String, BTreeSet<String>>,
}

/// `n` paragraphs over `substances` labels. Each paragraph carries one or
/// two labels; 80% of its tokens come from its labels' vocabularies and
/// the rest from a shared background vocabulary.
pub fn planted_topic_corpus(rng: &mut impl Rng, substances: &[&str], n: usize) -> PlantedCorpus {
    let vocab: BTreeMap<String, BTreeSet<String>> = substances
        .iter()
        .map(|s| {
            let words = (0..12).map(|i| format!("{}w{i}", s.to_lowercase())).collect();
            (s.to_string(), words)
        })
        .collect();
    let background: Vec<String> = (0..40).map(|i| format!("bg{i}")).collect();
    let mut paragraphs = Vec::with_capacity(n);
    for p in 0..n {
        let mut labels = vec![substances[p % substances.len()].to_string()];
        if rng.random_bool(0.2) {
            let other = substances.choose(rng).unwrap().to_string();
            if other != labels[0] {
                labels.push(other);
            }
        }
        let len = rng.random_range(40..80);
        let tokens = (0..len)
            .map(|_| {
                if rng.random_bool(0.8) {
                    let label = labels.choose(rng).unwrap();
                    let words: Vec<&String> = vocab[label].iter().collect();
                    // Zipf-like skew so each topic has a clear top word.
                    let r = rng.random::<f64>();
                    words[((r * r) * words.len() as f64) as usize].clone()
                } else {
                    background.choose(rng).unwrap().clone()
                }
            })
            .collect();
        paragraphs.push((tokens, labels));
    }
    PlantedCorpus { paragraphs, vocab }
}

/// Topic mixtures of `n` units over `k` topics: a dominant topic, a
/// secondary topic and a little mass everywhere.
pub fn topic_mixtures(rng: &mut impl Rng, n: usize, k: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            let mut theta: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 0.02).collect();
            let main = rng.random_range(0..k);
            let second = rng.random_range(0..k);
            theta[main] += rng.random_range(0.5..0.9);
            theta[second] += rng.random_range(0.0..0.3);
            let s: f64 = theta.iter().sum();
            theta.iter().map(|x| x / s).collect()
        })
        .collect()
}

/// Non-negative sparse vectors drawn around `centers` random prototypes.
pub fn clustered_vectors(rng: &mut impl Rng, n: usize, dim: usize, centers: usize) -> Vec<Vec<f64>> {
    let protos: Vec<Vec<f64>> = (0..centers)
        .map(|_| (0..dim).map(|_| if rng.random_bool(0.15) { rng.random::<f64>() } else { 0.0 }).collect())
        .collect();
    (0..n)
        .map(|_| {
            let p = protos.choose(rng).unwrap();
            let v: Vec<f64> = p
                .iter()
                .map(|&x| {
                    let noise = if rng.random_bool(0.05) { rng.random::<f64>() * 0.5 } else { 0.0 };
                    x * rng.random_range(0.6..1.4) + noise
                })
                .collect();
            if v.iter().all(|&x| x == 0.0) {
                let mut v = v;
                v[rng.random_range(0..dim)] = 1.0;
                v
            } else {
                v
            }
        })
        .collect()
}

/// Count matrix with `k` planted groups over disjoint disease blocks.
/// Returns the counts and each drug's group.
pub fn planted_counts(rng: &mut impl Rng, k: usize, per_group: usize, block: usize) -> (Vec<Vec<u32>>, Vec<usize>) {
    let mut counts = Vec::new();
    let mut groups = Vec::new();
    for g in 0..k {
        for _ in 0..per_group {
            let mut row = vec![0u32; k * block];
            for j in 0..block {
                row[g * block + j] = rng.random_range(3..6);
            }
            counts.push(row);
            groups.push(g);
        }
    }
    (counts, groups)
}

/// Random count matrix with every row non-zero.
pub fn random_counts(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<Vec<u32>> {
    (0..rows)
        .map(|_| {
            let mut row: Vec<u32> =
                (0..cols).map(|_| if rng.random_bool(0.3) { rng.random_range(1..10) } else { 0 }).collect();
            if row.iter().all(|&c| c == 0) {
                row[rng.random_range(0..cols)] = 1;
            }
            row
        })
        .collect()
}
