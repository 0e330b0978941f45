//! Slow, obviously-correct reference implementations.
//!
//! Each function here recomputes a result of the pipeline by the most
//! direct route available (exhaustive scans, nested loops, a textbook
//! simplex) and shares no code with the implementation it checks.

pub mod kg;
pub mod lp;
pub mod ntriples;
pub mod synth;

use std::collections::{BTreeMap, BTreeSet};

/// Tokens as `(start, end)` byte spans: runs of alphanumeric characters,
/// where `-` or `/` between two alphanumerics joins a run.
pub fn tokens(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let part_of_token = |i: usize| -> bool {
        let c = chars[i].1;
        if c.is_alphanumeric() {
            return true;
        }
        (c == '-' || c == '/')
            && i > 0
            && i + 1 < chars.len()
            && chars[i - 1].1.is_alphanumeric()
            && chars[i + 1].1.is_alphanumeric()
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !part_of_token(i) {
            i += 1;
            continue;
        }
        let start = chars[i].0;
        while i < chars.len() && part_of_token(i) {
            i += 1;
        }
        let end = if i < chars.len() { chars[i].0 } else { text.len() };
        out.push((start, end));
    }
    out
}

fn lower(s: &str) -> String {
    s.chars().flat_map(char::to_lowercase).collect()
}

/// Leftmost-longest dictionary scan: at each token, try every entry and
/// keep the longest token sequence that matches case-insensitively.
pub fn leftmost_longest(text: &str, entries: &[(String, String)]) -> Vec<(usize, usize, String)> {
    let spans = tokens(text);
    let words: Vec<String> = spans.iter().map(|&(s, e)| lower(&text[s..e])).collect();
    let keyed: Vec<(Vec<String>, &str)> = entries
        .iter()
        .map(|(surface, code)| {
            let toks = tokens(surface)
                .into_iter()
                .map(|(s, e)| lower(&surface[s..e]))
                .collect();
            (toks, code.as_str())
        })
        .filter(|(t, _): &(Vec<String>, &str)| !t.is_empty())
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let mut best: Option<(usize, &str)> = None;
        for (toks, code) in &keyed {
            let n = toks.len();
            if i + n <= words.len() && words[i..i + n] == toks[..] && best.is_none_or(|(b, _)| n > b) {
                best = Some((n, code));
            }
        }
        match best {
            Some((n, code)) => {
                out.push((spans[i].0, spans[i + n - 1].1, code.to_string()));
                i += n;
            }
            None => i += 1,
        }
    }
    out
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..u.len() {
        s += u[i] * v[i];
    }
    s
}

pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    dot(u, v) / (dot(u, u).sqrt() * dot(v, v).sqrt())
}

/// Smoothed TF-IDF with L2-normalized rows.
pub fn tfidf(counts: &[Vec<u32>]) -> Vec<Vec<f64>> {
    let n = counts.len() as f64;
    let cols = counts.first().map_or(0, Vec::len);
    let mut idf = vec![0.0; cols];
    for (j, w) in idf.iter_mut().enumerate() {
        let df = counts.iter().filter(|row| row[j] != 0).count() as f64;
        *w = ((1.0 + n) / (1.0 + df)).ln() + 1.0;
    }
    counts
        .iter()
        .map(|row| {
            let raw: Vec<f64> = row.iter().zip(&idf).map(|(&c, w)| c as f64 * w).collect();
            let norm = dot(&raw, &raw).sqrt();
            raw.iter().map(|x| if norm > 0.0 { x / norm } else { 0.0 }).collect()
        })
        .collect()
}

/// Mean silhouette; singleton clusters contribute 0.
pub fn silhouette(d: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = d.len();
    let clusters: BTreeSet<usize> = labels.iter().copied().collect();
    let mut total = 0.0;
    for i in 0..n {
        let mean_to = |c: usize, skip_self: bool| -> f64 {
            let members: Vec<usize> =
                (0..n).filter(|&j| labels[j] == c && !(skip_self && j == i)).collect();
            members.iter().map(|&j| d[i][j]).sum::<f64>() / members.len() as f64
        };
        if labels.iter().filter(|&&l| l == labels[i]).count() == 1 {
            continue;
        }
        let a = mean_to(labels[i], true);
        let b = clusters
            .iter()
            .filter(|&&c| c != labels[i])
            .map(|&c| mean_to(c, false))
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

/// Single linkage by exhaustive search over cluster pairs. Returns merges
/// `(a, b, distance)` with `a < b`, where merge `i` creates cluster `n + i`
/// and ties go to the lexicographically smallest `(a, b)`.
pub fn single_linkage(d: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
    let n = d.len();
    let mut clusters: BTreeMap<usize, Vec<usize>> = (0..n).map(|i| (i, vec![i])).collect();
    let mut merges = Vec::new();
    for step in 0..n.saturating_sub(1) {
        let ids: Vec<usize> = clusters.keys().copied().collect();
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..ids.len() {
            for y in x + 1..ids.len() {
                let mut link = f64::INFINITY;
                for &p in &clusters[&ids[x]] {
                    for &q in &clusters[&ids[y]] {
                        link = link.min(d[p][q]);
                    }
                }
                let cand = (link, ids[x], ids[y]);
                let better = match best {
                    None => true,
                    Some(b) => cand.0 < b.0 || (cand.0 == b.0 && (cand.1, cand.2) < (b.1, b.2)),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (dist, a, b) = best.expect("two clusters");
        let mut members = clusters.remove(&a).unwrap();
        members.extend(clusters.remove(&b).unwrap());
        clusters.insert(n + step, members);
        merges.push((a, b, dist));
    }
    merges
}

/// Jensen–Shannon divergence (natural log) from its KL definition.
pub fn jensen_shannon(p: &[f64], q: &[f64]) -> f64 {
    let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    let kl = |x: &[f64]| -> f64 {
        x.iter()
            .zip(&m)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, mm)| a * (a / mm).ln())
            .sum()
    };
    0.5 * kl(p) + 0.5 * kl(q)
}

/// Indices of the `k` items with the smallest `score`, ties by index.
pub fn top_k_by(n: usize, k: usize, score: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| score(a).partial_cmp(&score(b)).unwrap().then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Nested-loop conjunctive join in pattern order. Terms are opaque strings;
/// pattern entries starting with `?` are variables. Returns the distinct
/// projected rows, sorted.
pub fn exhaustive_join(
    triples: &[[String; 3]],
    patterns: &[[&str; 3]],
    select: &[&str],
    keep: impl Fn(&BTreeMap<String, String>) -> bool,
) -> BTreeSet<Vec<String>> {
    let mut partial: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for pattern in patterns {
        let mut next = Vec::new();
        for binding in &partial {
            for triple in triples {
                let mut b = binding.clone();
                let mut ok = true;
                for (term, value) in pattern.iter().zip(triple) {
                    if let Some(var) = term.strip_prefix('?') {
                        match b.get(var) {
                            Some(existing) if existing != value => ok = false,
                            Some(_) => {}
                            None => {
                                b.insert(var.to_string(), value.clone());
                            }
                        }
                    } else if term != value {
                        ok = false;
                    }
                }
                if ok {
                    next.push(b);
                }
            }
        }
        partial = next;
    }
    partial
        .into_iter()
        .filter(|b| keep(b))
        .map(|b| select.iter().map(|v| b[*v].clone()).collect())
        .collect()
}
