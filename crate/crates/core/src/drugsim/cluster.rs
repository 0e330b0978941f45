use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{DrugSimError, DrugVector, Result};

pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(DrugSimError::DimensionMismatch(u.len(), v.len()));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(DrugSimError::ZeroVector);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Pairwise `1 - cosine` distances.
pub fn cosine_distance_matrix(vectors: &[DrugVector]) -> Result<Vec<Vec<f64>>> {
    let n = vectors.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let dist = 1.0 - cosine_similarity(&vectors[i].weights, &vectors[j].weights)?;
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    Ok(d)
}

/// One agglomeration step. Leaves are clusters `0..n`; merge `i` creates
/// cluster `n + i`. `a < b` always.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Flat assignment into `k` clusters by replaying the first `n - k`
    /// merges. Labels are dense and numbered by first appearance.
    pub fn cut(&self, k: usize) -> Vec<usize> {
        let k = k.clamp(1, self.n.max(1));
        let mut parent: Vec<usize> = (0..self.n + self.merges.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, m) in self.merges.iter().take(self.n - k).enumerate() {
            let id = self.n + i;
            let ra = find(&mut parent, m.a);
            let rb = find(&mut parent, m.b);
            parent[ra] = id;
            parent[rb] = id;
        }
        let mut labels: BTreeMap<usize, usize> = BTreeMap::new();
        (0..self.n)
            .map(|p| {
                let root = find(&mut parent, p);
                let next = labels.len();
                *labels.entry(root).or_insert(next)
            })
            .collect()
    }
}

pub fn agglomerate(vectors: &[DrugVector]) -> Result<Dendrogram> {
    if vectors.len() < 2 {
        return Err(DrugSimError::TooFewItems(vectors.len()));
    }
    Ok(single_linkage(cosine_distance_matrix(vectors)?))
}

/// Single-linkage clustering over a distance matrix.
///
/// Each active cluster caches its nearest neighbour, preferring the smaller
/// cluster id on equal distance; the globally closest pair is then the
/// cached pair with the smallest `(distance, min id, max id)`. Merged rows
/// take the elementwise minimum, so distances never grow and only clusters
/// whose neighbour was consumed need a rescan.
pub(crate) fn single_linkage(mut d: Vec<Vec<f64>>) -> Dendrogram {
    let n = d.len();
    let mut active = vec![true; n];
    let mut id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut nn = vec![usize::MAX; n];
    let mut nn_d = vec![f64::INFINITY; n];

    let rescan = |s: usize, d: &[Vec<f64>], active: &[bool], id: &[usize]| -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for t in (0..d.len()).filter(|&t| t != s && active[t]) {
            let better = match best.0 {
                usize::MAX => true,
                b => d[s][t] < best.1 || (d[s][t] == best.1 && id[t] < id[b]),
            };
            if better {
                best = (t, d[s][t]);
            }
        }
        best
    };

    for s in 0..n {
        (nn[s], nn_d[s]) = rescan(s, &d, &active, &id);
    }

    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    for step in 0..n.saturating_sub(1) {
        let key = |s: usize| {
            let (x, y) = (id[s], id[nn[s]]);
            (nn_d[s], x.min(y), x.max(y))
        };
        let s = (0..n)
            .filter(|&s| active[s])
            .min_by(|&p, &q| {
                let (dp, ap, bp) = key(p);
                let (dq, aq, bq) = key(q);
                dp.total_cmp(&dq).then((ap, bp).cmp(&(aq, bq)))
            })
            .expect("at least two active clusters");
        let t = nn[s];
        merges.push(Merge {
            a: id[s].min(id[t]),
            b: id[s].max(id[t]),
            distance: nn_d[s],
            size: size[s] + size[t],
        });

        active[t] = false;
        id[s] = n + step;
        size[s] += size[t];
        for c in 0..n {
            if active[c] && c != s {
                let merged = d[s][c].min(d[t][c]);
                d[s][c] = merged;
                d[c][s] = merged;
            }
        }
        (nn[s], nn_d[s]) = rescan(s, &d, &active, &id);
        for c in 0..n {
            if !active[c] || c == s {
                continue;
            }
            if nn[c] == s || nn[c] == t {
                (nn[c], nn_d[c]) = rescan(c, &d, &active, &id);
            } else if d[c][s] < nn_d[c] {
                nn[c] = s;
                nn_d[c] = d[c][s];
            }
        }
    }
    Dendrogram { n, merges }
}

/// Mean silhouette coefficient under cosine distance.
pub fn silhouette_score(vectors: &[DrugVector], assignment: &[usize]) -> Result<f64> {
    if assignment.len() != vectors.len() {
        return Err(DrugSimError::AssignmentLength {
            expected: vectors.len(),
            got: assignment.len(),
        });
    }
    silhouette_with_distances(&cosine_distance_matrix(vectors)?, assignment)
}

/// Mean silhouette over a precomputed distance matrix. Points in singleton
/// clusters score 0.
pub fn silhouette_with_distances(d: &[Vec<f64>], assignment: &[usize]) -> Result<f64> {
    let n = d.len();
    if assignment.len() != n {
        return Err(DrugSimError::AssignmentLength {
            expected: n,
            got: assignment.len(),
        });
    }
    let labels: Vec<usize> = {
        let mut l = assignment.to_vec();
        l.sort_unstable();
        l.dedup();
        l
    };
    if labels.len() < 2 {
        return Err(DrugSimError::SingleCluster);
    }
    let slot = |label: usize| labels.binary_search(&label).expect("label present");
    let mut sizes = vec![0usize; labels.len()];
    for &a in assignment {
        sizes[slot(a)] += 1;
    }

    let mut total = 0.0;
    let mut sums = vec![0.0; labels.len()];
    for i in 0..n {
        let own = slot(assignment[i]);
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[slot(assignment[j])] += d[i][j];
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..labels.len())
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSelection {
    pub k: usize,
    pub assignment: Vec<usize>,
    /// Mean silhouette for every `k` tried.
    pub scores: Vec<(usize, f64)>,
}

/// Cuts the dendrogram at every `k` in `[k_min, k_max]` and keeps the cut
/// with the highest mean silhouette (smallest `k` on ties).
pub fn select_clusters(
    dendrogram: &Dendrogram,
    vectors: &[DrugVector],
    k_min: usize,
    k_max: usize,
) -> Result<ClusterSelection> {
    let n = dendrogram.n;
    if vectors.len() != n || k_min < 2 || k_min > k_max || k_max + 1 > n {
        return Err(DrugSimError::InvalidRange { k_min, k_max, n });
    }
    let d = cosine_distance_matrix(vectors)?;
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    let mut scores = Vec::new();
    for k in k_min..=k_max {
        let assignment = dendrogram.cut(k);
        let score = silhouette_with_distances(&d, &assignment)?;
        scores.push((k, score));
        if best.as_ref().is_none_or(|(_, s, _)| score > *s) {
            best = Some((k, score, assignment));
        }
    }
    let (k, _, assignment) = best.expect("non-empty range");
    Ok(ClusterSelection {
        k,
        assignment,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(w: &[f64]) -> DrugVector {
        DrugVector {
            drug: String::new(),
            weights: w.to_vec(),
        }
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_similarity(&[1.0, 2.0, 0.0], &[2.0, 1.0, 0.0]).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert_eq!(cosine_similarity(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 1.0);
        assert!(matches!(
            cosine_similarity(&[1.0], &[1.0, 0.0]),
            Err(DrugSimError::DimensionMismatch(1, 2))
        ));
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(DrugSimError::ZeroVector)));
    }

    #[test]
    fn hand_traced_linkage() {
        let d = vec![
            vec![0.0, 0.1, 0.6],
            vec![0.1, 0.0, 0.5],
            vec![0.6, 0.5, 0.0],
        ];
        let dendro = single_linkage(d);
        assert_eq!((dendro.merges[0].a, dendro.merges[0].b), (0, 1));
        assert_eq!(dendro.merges[0].distance, 0.1);
        assert_eq!((dendro.merges[1].a, dendro.merges[1].b), (2, 3));
        assert_eq!(dendro.merges[1].distance, 0.5);
        assert_eq!(dendro.merges[1].size, 3);
    }

    #[test]
    fn identical_vectors_merge_at_zero_smallest_pair_first() {
        let vs: Vec<_> = (0..4).map(|_| dv(&[1.0, 1.0])).collect();
        let dendro = agglomerate(&vs).unwrap();
        assert!(dendro.merges.iter().all(|m| m.distance.abs() < 1e-12));
        let pairs: Vec<_> = dendro.merges.iter().map(|m| (m.a, m.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (2, 3), (4, 5)]);
    }

    #[test]
    fn too_few_items() {
        assert!(matches!(agglomerate(&[dv(&[1.0])]), Err(DrugSimError::TooFewItems(1))));
    }

    #[test]
    fn cut_labels() {
        let d = vec![
            vec![0.0, 0.1, 0.6],
            vec![0.1, 0.0, 0.5],
            vec![0.6, 0.5, 0.0],
        ];
        let dendro = single_linkage(d);
        assert_eq!(dendro.cut(3), vec![0, 1, 2]);
        assert_eq!(dendro.cut(2), vec![0, 0, 1]);
        assert_eq!(dendro.cut(1), vec![0, 0, 0]);
    }

    #[test]
    fn silhouette_perfect_and_singleton() {
        let vs = [dv(&[1.0, 0.0]), dv(&[1.0, 0.0]), dv(&[0.0, 1.0]), dv(&[0.0, 1.0])];
        assert_eq!(silhouette_score(&vs, &[0, 0, 1, 1]).unwrap(), 1.0);
        // point 2 alone contributes 0; others: a=0, b>0 -> 1
        let vs = [dv(&[1.0, 0.0]), dv(&[1.0, 0.0]), dv(&[0.0, 1.0])];
        let s = silhouette_score(&vs, &[0, 0, 1]).unwrap();
        assert!((s - 2.0 / 3.0).abs() < 1e-15);
        assert!(matches!(silhouette_score(&vs, &[1, 1, 1]), Err(DrugSimError::SingleCluster)));
    }

    #[test]
    fn select_range_validation() {
        let vs = [dv(&[1.0, 0.0]), dv(&[0.0, 1.0]), dv(&[1.0, 1.0])];
        let dendro = agglomerate(&vs).unwrap();
        assert!(matches!(
            select_clusters(&dendro, &vs, 2, 3),
            Err(DrugSimError::InvalidRange { .. })
        ));
        assert!(select_clusters(&dendro, &vs, 2, 2).is_ok());
    }
}
