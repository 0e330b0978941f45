use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{cosine_similarity, DrugSimError, DrugVector, Result};
use crate::rng;

const MAGIC: &[u8; 8] = b"D4CANN01";
const SPLIT_ATTEMPTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnConfig {
    pub tree_count: usize,
    pub leaf_size: usize,
    pub seed: u64,
}

impl Default for AnnConfig {
    fn default() -> Self {
        Self {
            tree_count: 10,
            leaf_size: 16,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Split {
        normal: Vec<f64>,
        offset: f64,
        left: u32,
        right: u32,
    },
    Leaf(Vec<u32>),
}

/// Forest of random-hyperplane trees over unit-normalized drug vectors.
///
/// Each internal node splits by the hyperplane equidistant to two randomly
/// chosen member points; when no such split separates the members (e.g.
/// duplicates) the members are halved at random under a zero hyperplane,
/// which queries treat as undecided.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnIndex {
    config: AnnConfig,
    dim: usize,
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
    trees: Vec<Vec<Node>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter().map(|x| x / norm).collect()
    } else {
        v.to_vec()
    }
}

impl AnnIndex {
    pub fn build(vectors: &[DrugVector], config: AnnConfig) -> Result<Self> {
        let dim = vectors.first().map_or(0, |v| v.weights.len());
        if vectors.is_empty() {
            return Err(DrugSimError::TooFewItems(0));
        }
        if let Some(v) = vectors.iter().find(|v| v.weights.len() != dim) {
            return Err(DrugSimError::DimensionMismatch(dim, v.weights.len()));
        }
        let config = AnnConfig {
            tree_count: config.tree_count.max(1),
            leaf_size: config.leaf_size.max(1),
            ..config
        };
        let mut index = AnnIndex {
            config,
            dim,
            ids: vectors.iter().map(|v| v.drug.clone()).collect(),
            vectors: vectors.iter().map(|v| normalized(&v.weights)).collect(),
            trees: Vec::with_capacity(config.tree_count),
        };
        let mut rng = rng::seeded(config.seed);
        for _ in 0..config.tree_count {
            let mut nodes = Vec::new();
            let all: Vec<u32> = (0..vectors.len() as u32).collect();
            index.grow(all, &mut nodes, &mut rng);
            index.trees.push(nodes);
        }
        Ok(index)
    }

    /// Appends the subtree for `items` and returns its node index.
    fn grow(&self, items: Vec<u32>, nodes: &mut Vec<Node>, rng: &mut ChaCha8Rng) -> u32 {
        let me = nodes.len() as u32;
        if items.len() <= self.config.leaf_size {
            nodes.push(Node::Leaf(items));
            return me;
        }
        nodes.push(Node::Leaf(Vec::new()));

        let mut split = None;
        for _ in 0..SPLIT_ATTEMPTS {
            let i = items[rng.random_range(0..items.len())] as usize;
            let j = items[rng.random_range(0..items.len())] as usize;
            let (a, b) = (&self.vectors[i], &self.vectors[j]);
            let normal: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            if dot(&normal, &normal) < 1e-24 {
                continue;
            }
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
            let offset = dot(&normal, &mid);
            let (mut left, mut right) = (Vec::new(), Vec::new());
            for &it in &items {
                let margin = dot(&normal, &self.vectors[it as usize]) - offset;
                let go_right = match margin.partial_cmp(&0.0) {
                    Some(Ordering::Greater) => true,
                    Some(Ordering::Less) => false,
                    _ => rng.random_bool(0.5),
                };
                if go_right {
                    right.push(it);
                } else {
                    left.push(it);
                }
            }
            if !left.is_empty() && !right.is_empty() {
                split = Some((normal, offset, left, right));
                break;
            }
        }
        let (normal, offset, left, right) = split.unwrap_or_else(|| {
            let mut shuffled = items;
            shuffled.shuffle(rng);
            let right = shuffled.split_off(shuffled.len() / 2);
            (vec![0.0; self.dim], 0.0, shuffled, right)
        });
        let l = self.grow(left, nodes, rng);
        let r = self.grow(right, nodes, rng);
        nodes[me as usize] = Node::Split {
            normal,
            offset,
            left: l,
            right: r,
        };
        me
    }

    pub fn config(&self) -> AnnConfig {
        self.config
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    /// Items of every leaf of tree `t`, in tree order.
    pub fn tree_items(&self, t: usize) -> Vec<u32> {
        self.trees[t]
            .iter()
            .filter_map(|n| match n {
                Node::Leaf(items) => Some(items.iter().copied()),
                Node::Split { .. } => None,
            })
            .flatten()
            .collect()
    }

    pub fn default_search_k(&self, k: usize) -> usize {
        k.max(self.config.leaf_size) * self.config.tree_count
    }

    /// Candidate items gathered by best-first descent over all trees until
    /// `search_k` distinct items are collected.
    pub fn candidates(&self, query: &[f64], search_k: usize) -> Vec<u32> {
        #[derive(PartialEq)]
        struct Entry(f64, usize, u32);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> Ordering {
                self.0
                    .total_cmp(&other.0)
                    .then_with(|| other.1.cmp(&self.1))
                    .then_with(|| other.2.cmp(&self.2))
            }
        }

        let query = normalized(query);
        let mut heap: BinaryHeap<Entry> = (0..self.trees.len())
            .map(|t| Entry(f64::INFINITY, t, 0))
            .collect();
        let mut seen = vec![false; self.ids.len()];
        let mut out = Vec::new();
        while let Some(Entry(priority, t, node)) = heap.pop() {
            if out.len() >= search_k {
                break;
            }
            match &self.trees[t][node as usize] {
                Node::Leaf(items) => {
                    for &it in items {
                        if !std::mem::replace(&mut seen[it as usize], true) {
                            out.push(it);
                        }
                    }
                }
                Node::Split {
                    normal,
                    offset,
                    left,
                    right,
                } => {
                    let margin = dot(normal, &query) - offset;
                    heap.push(Entry(priority.min(margin), t, *right));
                    heap.push(Entry(priority.min(-margin), t, *left));
                }
            }
        }
        out
    }

    /// Approximate `k` most cosine-similar items, excluding `exclude`.
    pub fn query(&self, query: &[f64], k: usize, search_k: usize, exclude: Option<usize>) -> Vec<(usize, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let mut scored: Vec<(usize, f64)> = self
            .candidates(query, search_k)
            .into_iter()
            .map(|i| i as usize)
            .filter(|&i| Some(i) != exclude)
            .filter_map(|i| cosine_similarity(query, &self.vectors[i]).ok().map(|s| (i, s)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        scored
    }

    /// Neighbours of an indexed item.
    pub fn neighbors(&self, item: usize, k: usize) -> Vec<(usize, f64)> {
        let search_k = self.default_search_k(k);
        self.query(&self.vectors[item].clone(), k, search_k, Some(item))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.config.seed.to_le_bytes());
        for x in [self.config.tree_count, self.config.leaf_size, self.dim, self.ids.len()] {
            out.extend_from_slice(&(x as u32).to_le_bytes());
        }
        for id in &self.ids {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        for v in &self.vectors {
            v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        }
        for tree in &self.trees {
            out.extend_from_slice(&(tree.len() as u32).to_le_bytes());
            for node in tree {
                match node {
                    Node::Leaf(items) => {
                        out.push(0);
                        out.extend_from_slice(&(items.len() as u32).to_le_bytes());
                        items.iter().for_each(|i| out.extend_from_slice(&i.to_le_bytes()));
                    }
                    Node::Split {
                        normal,
                        offset,
                        left,
                        right,
                    } => {
                        out.push(1);
                        normal.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
                        out.extend_from_slice(&offset.to_le_bytes());
                        out.extend_from_slice(&left.to_le_bytes());
                        out.extend_from_slice(&right.to_le_bytes());
                    }
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(DrugSimError::Malformed("not an ann.bin file".into()));
        }
        let seed = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let tree_count = r.u32()? as usize;
        let leaf_size = r.u32()? as usize;
        let dim = r.u32()? as usize;
        let n = r.u32()? as usize;
        let ids = (0..n)
            .map(|_| {
                let len = r.u32()? as usize;
                String::from_utf8(r.take(len)?.to_vec())
                    .map_err(|e| DrugSimError::Malformed(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let vectors = (0..n)
            .map(|_| (0..dim).map(|_| r.f64()).collect())
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let mut trees = Vec::with_capacity(tree_count);
        for _ in 0..tree_count {
            let count = r.u32()? as usize;
            let mut nodes = Vec::with_capacity(count);
            for _ in 0..count {
                let node = match r.take(1)?[0] {
                    0 => {
                        let len = r.u32()? as usize;
                        Node::Leaf((0..len).map(|_| r.u32()).collect::<Result<_>>()?)
                    }
                    1 => Node::Split {
                        normal: (0..dim).map(|_| r.f64()).collect::<Result<_>>()?,
                        offset: r.f64()?,
                        left: r.u32()?,
                        right: r.u32()?,
                    },
                    tag => return Err(DrugSimError::Malformed(format!("bad node tag {tag}"))),
                };
                nodes.push(node);
            }
            trees.push(nodes);
        }
        if r.pos != bytes.len() {
            return Err(DrugSimError::Malformed("trailing bytes".into()));
        }
        Ok(Self {
            config: AnnConfig {
                tree_count,
                leaf_size,
                seed,
            },
            dim,
            ids,
            vectors,
            trees,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| DrugSimError::Malformed("truncated ann.bin".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}
