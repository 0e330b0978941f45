use std::collections::BTreeSet;

use d4c_core::topics::{
    hash_distribution, jensen_shannon, train_topic_model, HashThresholds, LabeledParagraph,
    TopicConfig, TopicDistribution, TopicIndex,
};
use d4c_oracles::synth;
use proptest::prelude::*;

fn distribution() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 8).prop_filter_map("non-zero", |v| {
        let s: f64 = v.iter().sum();
        (s > 0.0).then(|| v.iter().map(|x| x / s).collect())
    })
}

proptest! {
    #[test]
    fn js_matches_oracle_and_is_symmetric(p in distribution(), q in distribution()) {
        let d = jensen_shannon(&p, &q);
        prop_assert!((d - d4c_oracles::jensen_shannon(&p, &q)).abs() <= 1e-12);
        prop_assert_eq!(d, jensen_shannon(&q, &p));
        prop_assert!((0.0..=std::f64::consts::LN_2 + 1e-12).contains(&d));
        prop_assert_eq!(jensen_shannon(&p, &p), 0.0);
    }

    #[test]
    fn hash_levels_are_disjoint(p in distribution()) {
        let h = hash_distribution(&p, HashThresholds::default());
        let all: Vec<usize> = h.levels.iter().flatten().copied().collect();
        let distinct: BTreeSet<usize> = all.iter().copied().collect();
        prop_assert_eq!(all.len(), distinct.len());
        prop_assert!(!h.level0().is_empty());
    }
}

#[test]
fn planted_topics_are_recovered() {
    let substances = ["P01BA01", "P01BA02", "J05AR10"];
    let corpus = synth::planted_topic_corpus(&mut synth::rng(3), &substances, 150);
    let paragraphs: Vec<LabeledParagraph> = corpus
        .paragraphs
        .iter()
        .map(|(tokens, labels)| LabeledParagraph { tokens: tokens.clone(), labels: labels.clone() })
        .collect();
    let config = TopicConfig { iterations: 200, seed: 9, ..TopicConfig::default() };
    let model = train_topic_model(&paragraphs, &config).unwrap();
    for s in substances {
        let t = model.topic_for_label(s).unwrap();
        let (top, _) = &model.topic_top_words(t, 1).unwrap()[0];
        assert!(corpus.vocab[s].contains(top), "{s}: {top}");
    }
    for t in 0..model.num_topics() {
        let sum: f64 = model.phi_row(t).unwrap().iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn similar_documents_recall_against_exact_scan() {
    let thetas = synth::topic_mixtures(&mut synth::rng(4), 500, 20);
    let units: Vec<TopicDistribution> = thetas
        .iter()
        .enumerate()
        .map(|(i, theta)| TopicDistribution { unit_id: format!("u{i:04}"), theta: theta.clone() })
        .collect();
    let index = TopicIndex::new(units, HashThresholds::default());
    let mut recall = 0.0;
    for q in 0..500 {
        let got: BTreeSet<String> = index
            .similar_documents(&format!("u{q:04}"), 10)
            .unwrap()
            .into_iter()
            .map(|(id, _)| id)
            .collect();
        let exact = d4c_oracles::top_k_by(500, 11, |j| {
            if j == q { f64::NEG_INFINITY } else { d4c_oracles::jensen_shannon(&thetas[q], &thetas[j]) }
        });
        let hits = exact[1..].iter().filter(|j| got.contains(&format!("u{:04}", j))).count();
        recall += hits as f64 / 10.0;
    }
    recall /= 500.0;
    assert!(recall >= 0.9, "recall {recall}");
}
