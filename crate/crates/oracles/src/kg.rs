//! Expected graph size for the shipped mapping, from the exported tables.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

type Rows = Vec<BTreeMap<String, String>>;

fn rows(dir: &Path, table: &str) -> Rows {
    let mut r = csv::Reader::from_path(dir.join(table)).expect("table readable");
    let headers = r.headers().expect("header row").clone();
    r.records()
        .map(|rec| {
            let rec = rec.expect("well-formed row");
            headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()
        })
        .collect()
}

fn nonempty(rows: &Rows, cols: &[&str]) -> usize {
    rows.iter().map(|r| cols.iter().filter(|c| !r[**c].is_empty()).count()).sum()
}

fn distinct(rows: &Rows, cols: &[&str]) -> usize {
    rows.iter()
        .map(|r| cols.iter().map(|c| r[*c].clone()).collect::<Vec<_>>())
        .collect::<BTreeSet<_>>()
        .len()
}

/// Per mapping: one triple per class plus one per non-empty object slot,
/// per row; the mention mappings count distinct subject/object pairs since
/// one paper repeats across its units.
pub fn expected_triple_count(tables: &Path) -> usize {
    let papers = rows(tables, "papers.csv");
    let paragraphs = rows(tables, "paragraphs.csv");
    let sentences = rows(tables, "sentences.csv");
    let drug_m = rows(tables, "drug_mentions.csv");
    let dis_m = rows(tables, "disease_mentions.csv");
    let substances = rows(tables, "substances.csv");
    let drugs = rows(tables, "drugs.csv");
    let diseases = rows(tables, "diseases.csv");
    let symptoms = rows(tables, "symptoms.csv");
    let paper = papers.len() + nonempty(&papers, &["id", "title", "abstract", "url"]);
    let paragraph = 3 * paragraphs.len() + nonempty(&paragraphs, &["section", "text"]);
    let paper_contains_paragraph = paragraphs.len();
    let sentence = 4 * sentences.len() + nonempty(&sentences, &["text"]);
    let contains_sentence = 2 * sentences.len();
    let mentions = distinct(&drug_m, &["unit_type", "unit_id", "atc_code"])
        + distinct(&drug_m, &["paper_id", "atc_code"])
        + distinct(&dis_m, &["unit_type", "unit_id", "mesh_code"])
        + distinct(&dis_m, &["paper_id", "mesh_code"]);
    let substance =
        2 * substances.len() + nonempty(&substances, &["atc_code", "label", "level1", "level2", "level3", "level4"]);
    let drug = 3 * drugs.len();
    let disease = 3 * diseases.len() + nonempty(&diseases, &["label"]);
    let symptom = symptoms.len();
    paper
        + paragraph
        + paper_contains_paragraph
        + sentence
        + contains_sentence
        + mentions
        + substance
        + drug
        + disease
        + symptom
}
