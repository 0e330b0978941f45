use d4c_core::diseasesim::{
    extract_terms, read_word2vec, term_distance, train_disease_model, wmd, write_word2vec,
    DiseaseModel, EmbeddingConfig,
};
use d4c_core::text::words;
use d4c_oracles::{lp, synth};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn bag(rng: &mut impl Rng, dim: usize) -> Vec<(Vec<f64>, f64)> {
    let n = rng.random_range(1..=5);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter()
        .map(|w| ((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(), w / s))
        .collect()
}

#[test]
fn wmd_matches_transport_lp() {
    let mut rng = synth::rng(31);
    for _ in 0..100 {
        let a = bag(&mut rng, 3);
        let b = bag(&mut rng, 3);
        let got = wmd(&a, &b, |u, v| euclid(u, v)).unwrap();
        let cost: Vec<Vec<f64>> = a.iter().map(|(u, _)| b.iter().map(|(v, _)| euclid(u, v)).collect()).collect();
        let wa: Vec<f64> = a.iter().map(|x| x.1).collect();
        let wb: Vec<f64> = b.iter().map(|x| x.1).collect();
        let want = lp::transport_cost(&wa, &wb, &cost);
        assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
        assert!(wmd(&a, &a, |u, v| euclid(u, v)).unwrap().abs() <= 1e-12);
    }
}

#[test]
fn zero_epoch_models_agree_on_shared_words() {
    let config = EmbeddingConfig { epochs: 0, dim: 20, ..EmbeddingConfig::default() };
    let a = vec![words("fever cough hydroxychloroquine trial patients")];
    let b = vec![words("fever malaria parasites chloroquine trial")];
    let ma = train_disease_model("A", &a, &config, None).unwrap();
    let mb = train_disease_model("B", &b, &config, None).unwrap();
    for w in ["fever", "trial"] {
        assert_eq!(term_distance(&ma, &mb, w).unwrap(), 0.0);
    }
    assert!(term_distance(&ma, &mb, "cough").is_err());
}

#[test]
fn word2vec_round_trip() {
    let config = EmbeddingConfig { dim: 8, epochs: 2, ..EmbeddingConfig::default() };
    let ctx = vec![words("alpha beta gamma alpha delta beta alpha")];
    let model = train_disease_model("X", &ctx, &config, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.w2v");
    write_word2vec(&model, &path).unwrap();
    let back = DiseaseModel::from_vectors("X", config, read_word2vec(&path).unwrap());
    assert_eq!(back.words(), model.words());
    for w in model.words() {
        assert_eq!(back.vector(w), model.vector(w));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wmd_is_symmetric_and_nonnegative(seed in any::<u64>()) {
        let mut rng = synth::rng(seed);
        let a = bag(&mut rng, 2);
        let b = bag(&mut rng, 2);
        let ab = wmd(&a, &b, |u, v| euclid(u, v)).unwrap();
        let ba = wmd(&b, &a, |u, v| euclid(u, v)).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-9);
    }

    #[test]
    fn term_extraction_ignores_paragraph_order(seed in any::<u64>()) {
        let mut rng = synth::rng(seed);
        let vocab = ["t cell", "the", "fever", "of", "viral load", "and", "patients", "dose"];
        let mut paragraphs: Vec<String> = (0..12)
            .map(|_| {
                (0..rng.random_range(3..15))
                    .map(|_| vocab[rng.random_range(0..vocab.len())])
                    .collect::<Vec<_>>()
                    .join(if rng.random_bool(0.8) { " " } else { ". " })
            })
            .collect();
        let before = extract_terms(&paragraphs, 20).unwrap();
        paragraphs.shuffle(&mut rng);
        prop_assert_eq!(before, extract_terms(&paragraphs, 20).unwrap());
    }
}
