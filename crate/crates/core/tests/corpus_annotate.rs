use std::path::{Path, PathBuf};

use d4c_core::annotate::{annotate_corpus, AnnotationStore, EntityKind, Gazetteer};
use d4c_core::corpus::{ingest, parent_paragraph, CorpusStore};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn load() -> (CorpusStore, AnnotationStore) {
    let (corpus, stats) = ingest(&fixtures().join("corpus")).unwrap();
    assert_eq!(stats.documents, 20);
    let atc = Gazetteer::from_csv_path(EntityKind::Drug, &fixtures().join("atc.csv")).unwrap();
    let mesh = Gazetteer::from_csv_path(EntityKind::Disease, &fixtures().join("mesh.csv")).unwrap();
    let annotations = annotate_corpus(&corpus, &atc, &mesh);
    (corpus, annotations)
}

#[test]
fn mention_spans_slice_to_surfaces() {
    let (corpus, annotations) = load();
    assert!(!annotations.is_empty());
    for m in annotations.mentions() {
        let text = if m.is_sentence_level() {
            &corpus.sentences().iter().find(|s| s.id == m.unit_id).unwrap().text
        } else {
            &corpus.paragraph(&m.unit_id).unwrap().text
        };
        assert_eq!(&text[m.start..m.end], m.surface);
        assert!(corpus.paragraph(parent_paragraph(&m.unit_id)).is_some());
    }
    let codes = annotations.distinct_codes(EntityKind::Drug);
    for code in ["P01BA01", "P01BA02", "J01FA10"] {
        assert!(codes.contains(code), "{code}");
    }
}

#[test]
fn stores_round_trip() {
    let (corpus, annotations) = load();
    let dir = tempfile::tempdir().unwrap();
    corpus.write_to(dir.path()).unwrap();
    let back = CorpusStore::load(dir.path()).unwrap();
    assert_eq!(back.documents(), corpus.documents());
    assert_eq!(back.sentences(), corpus.sentences());
    let path = dir.path().join("mentions.jsonl");
    annotations.write_jsonl(&path).unwrap();
    assert_eq!(AnnotationStore::read_jsonl(&path).unwrap().mentions(), annotations.mentions());
}

#[test]
fn sentences_tile_their_paragraphs() {
    let (corpus, _) = load();
    for p in corpus.paragraphs() {
        let sents: Vec<_> = corpus.sentences().iter().filter(|s| s.paragraph_id == p.id).collect();
        for s in &sents {
            assert_eq!(&p.text[s.start..s.end], s.text);
        }
        for w in sents.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
    }
}
