use std::collections::{BTreeMap, BTreeSet};

use d4c_core::annotate::{AnnotationStore, EntityKind, Mention};
use d4c_core::drugsim::{
    agglomerate, build_matrix, cosine_distance_matrix, cosine_similarity, select_clusters,
    silhouette_with_distances, tfidf_transform, AnnConfig, AnnIndex, CooccurrenceMatrix, CountMode,
    DrugVector,
};
use d4c_oracles::synth;
use proptest::prelude::*;
use rand::Rng;

fn codes(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:04}")).collect()
}

fn vectors_for(counts: &[Vec<u32>]) -> Vec<DrugVector> {
    let m = CooccurrenceMatrix::from_counts(codes("R", counts.len()), codes("D", counts[0].len()), counts).unwrap();
    tfidf_transform(&m)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tfidf_and_cosine_match_oracle(seed in any::<u64>(), n in 2usize..50, m in 1usize..20) {
        let counts = synth::random_counts(&mut synth::rng(seed), n, m);
        let got = vectors_for(&counts);
        let want = d4c_oracles::tfidf(&counts);
        for (g, w) in got.iter().zip(&want) {
            for (x, y) in g.weights.iter().zip(w) {
                prop_assert!(close(*x, *y));
            }
            let norm: f64 = g.weights.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(close(norm, 1.0));
        }
        let d = cosine_distance_matrix(&got).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want_d = if i == j { 0.0 } else { 1.0 - d4c_oracles::cosine(&want[i], &want[j]) };
                prop_assert!(close(d[i][j], want_d));
            }
        }
    }

    #[test]
    fn linkage_matches_oracle(seed in any::<u64>(), n in 2usize..50, m in 1usize..6) {
        // Few columns and small counts give many tied distances.
        let counts = synth::random_counts(&mut synth::rng(seed), n, m);
        let vectors = vectors_for(&counts);
        let dendro = agglomerate(&vectors).unwrap();
        let want = d4c_oracles::single_linkage(&cosine_distance_matrix(&vectors).unwrap());
        prop_assert_eq!(dendro.merges.len(), want.len());
        for (g, (a, b, dist)) in dendro.merges.iter().zip(&want) {
            prop_assert_eq!((g.a, g.b), (*a, *b));
            prop_assert!(close(g.distance, *dist));
        }
    }

    #[test]
    fn silhouette_matches_oracle(seed in any::<u64>(), n in 2usize..50, k in 2usize..6) {
        let mut rng = synth::rng(seed);
        let counts = synth::random_counts(&mut rng, n, 8);
        let d = cosine_distance_matrix(&vectors_for(&counts)).unwrap();
        let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        labels[0] = 0;
        labels[n - 1] = 1;
        let got = silhouette_with_distances(&d, &labels).unwrap();
        prop_assert!(close(got, d4c_oracles::silhouette(&d, &labels)));
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(u in prop::collection::vec(0.0f64..10.0, 1..20), seed in any::<u64>()) {
        let mut rng = synth::rng(seed);
        let v: Vec<f64> = u.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
        prop_assume!(u.iter().any(|&x| x > 0.0));
        let a = cosine_similarity(&u, &v).unwrap();
        let b = cosine_similarity(&v, &u).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!((-1.0..=1.0).contains(&a));
    }
}

#[test]
fn planted_clusters_are_recovered() {
    for k in [2, 3, 5] {
        let (counts, groups) = synth::planted_counts(&mut synth::rng(k as u64), k, 6, 4);
        let vectors = vectors_for(&counts);
        let dendro = agglomerate(&vectors).unwrap();
        let sel = select_clusters(&dendro, &vectors, 2, 8).unwrap();
        assert_eq!(sel.k, k);
        // Same partition up to label names.
        let pairs: BTreeSet<(usize, usize)> = sel.assignment.iter().copied().zip(groups.iter().copied()).collect();
        assert_eq!(pairs.len(), k);
    }
}

#[test]
fn matrix_matches_brute_force_counts() {
    let mut rng = synth::rng(5);
    let mut mentions = Vec::new();
    for p in 0..60 {
        let unit_id = format!("DOC{}#p{}", p / 4, p % 4);
        for i in 0..rng.random_range(0..6) {
            let (code, kind) = if rng.random_bool(0.5) {
                (format!("J05AR{:02}", rng.random_range(0..6)), EntityKind::Drug)
            } else {
                (format!("D{:06}", rng.random_range(0..5)), EntityKind::Disease)
            };
            mentions.push(Mention { unit_id: unit_id.clone(), start: i, end: i + 1, surface: "x".into(), code, kind });
        }
    }
    let store = AnnotationStore::from_mentions(mentions.clone());
    for mode in [CountMode::Paragraph, CountMode::MentionPairs] {
        let matrix = build_matrix(&store, mode).unwrap();
        let mut want: BTreeMap<(String, String), u32> = BTreeMap::new();
        let units: BTreeSet<&str> = mentions.iter().map(|m| m.unit_id.as_str()).collect();
        for unit in units {
            let here: Vec<&Mention> = mentions.iter().filter(|m| m.unit_id == unit).collect();
            let drugs: BTreeSet<&str> = here.iter().filter(|m| m.kind == EntityKind::Drug).map(|m| m.code.as_str()).collect();
            let diseases: BTreeSet<&str> = here.iter().filter(|m| m.kind == EntityKind::Disease).map(|m| m.code.as_str()).collect();
            for dr in &drugs {
                for di in &diseases {
                    let n = |c: &str| here.iter().filter(|m| m.code == c).count() as u32;
                    let inc = match mode {
                        CountMode::Paragraph => 1,
                        CountMode::MentionPairs => n(dr) * n(di),
                    };
                    *want.entry((dr.to_string(), di.to_string())).or_default() += inc;
                }
            }
        }
        for (i, dr) in matrix.drugs().iter().enumerate() {
            for (j, di) in matrix.diseases().iter().enumerate() {
                let expected = want.get(&(dr.clone(), di.clone())).copied().unwrap_or(0);
                assert_eq!(matrix.count(i, j), expected, "{dr} x {di}");
            }
        }
        let listed: usize = matrix.drugs().len() * matrix.diseases().len();
        assert!(want.len() <= listed);
    }
}

#[test]
fn ann_recall_and_round_trip() {
    let mut rng = synth::rng(21);
    let raw = synth::clustered_vectors(&mut rng, 1000, 60, 40);
    let vectors: Vec<DrugVector> = raw
        .iter()
        .enumerate()
        .map(|(i, w)| DrugVector { drug: format!("X{i:05}"), weights: w.clone() })
        .collect();
    let index = AnnIndex::build(&vectors, AnnConfig::default()).unwrap();
    let mut hit = 0;
    for q in (0..1000).step_by(20) {
        let got: BTreeSet<usize> = index.neighbors(q, 5).into_iter().map(|(j, _)| j).collect();
        let exact = d4c_oracles::top_k_by(1000, 6, |j| {
            if j == q { f64::NEG_INFINITY } else { -d4c_oracles::cosine(&raw[q], &raw[j]) }
        });
        hit += exact[1..].iter().filter(|j| got.contains(j)).count();
    }
    let recall = hit as f64 / 250.0;
    assert!(recall >= 0.9, "recall {recall}");

    let back = AnnIndex::from_bytes(&index.to_bytes()).unwrap();
    assert_eq!(back.ids(), index.ids());
    assert_eq!(back.neighbors(3, 5), index.neighbors(3, 5));
}

#[test]
fn twin_drug_ranks_first() {
    let mut rng = synth::rng(22);
    let mut raw = synth::clustered_vectors(&mut rng, 300, 40, 20);
    raw.push(raw[17].clone());
    let vectors: Vec<DrugVector> = raw
        .iter()
        .enumerate()
        .map(|(i, w)| DrugVector { drug: format!("X{i:05}"), weights: w.clone() })
        .collect();
    let index = AnnIndex::build(&vectors, AnnConfig::default()).unwrap();
    let top = index.neighbors(17, 5);
    assert_eq!(top[0].0, 300);
    assert!((top[0].1 - 1.0).abs() <= 1e-9);
}
