use std::collections::BTreeMap;

use d4c_core::diseasesim::{
    compare_diseases, extract_terms, train_disease_model, Aggregate, EmbeddingConfig,
};
use d4c_core::text::words;

const COVID: &str = "C000657245";
const MALARIA: &str = "D008288";
const CONJUNCTIVITIS: &str = "D003231";

fn fixture() -> BTreeMap<String, Vec<String>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/three_diseases.json");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["diseases"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(code, d)| {
            let ctx = d["contexts"].as_array().unwrap();
            (code.clone(), ctx.iter().map(|c| c.as_str().unwrap().to_string()).collect())
        })
        .collect()
}

#[test]
fn covid_is_closer_to_malaria_than_to_conjunctivitis() {
    let data = fixture();
    let terms = extract_terms(&data[COVID], 25).unwrap();
    for seed in 1..=5u64 {
        let config = EmbeddingConfig { seed, ..EmbeddingConfig::default() };
        let model = |code: &str| {
            let sents: Vec<Vec<String>> = data[code].iter().map(|p| words(p)).collect();
            train_disease_model(code, &sents, &config, None).unwrap()
        };
        let (c, m, j) = (model(COVID), model(MALARIA), model(CONJUNCTIVITIS));
        for mode in [Aggregate::Euclidean, Aggregate::Wmd] {
            let cm = compare_diseases(&c, &m, &terms, mode).unwrap();
            let cj = compare_diseases(&c, &j, &terms, mode).unwrap();
            eprintln!("seed {seed} {mode:?}: malaria {:.5} ({} terms) conj {:.5} ({} terms)", cm.aggregate, cm.compared_terms, cj.aggregate, cj.compared_terms);
            assert!(cm.aggregate < cj.aggregate);
        }
    }
}
