use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use super::{KgError, Result};
use crate::annotate::{parse_atc, AnnotationStore, EntityKind, Gazetteer};
use crate::corpus::{is_sentence_id, CorpusStore};

/// Tree number prefix of MeSH "Signs and Symptoms".
const SYMPTOM_TREE: &str = "C23.888";

/// Exported tables and their columns, in output order.
pub const EXPORT_TABLES: &[(&str, &[&str])] = &[
    ("papers.csv", &["id", "title", "abstract", "url"]),
    ("paragraphs.csv", &["id", "paper_id", "section", "ordinal", "text"]),
    ("sentences.csv", &["id", "paragraph_id", "paper_id", "start", "end", "text"]),
    (
        "drug_mentions.csv",
        &["unit_id", "unit_type", "paper_id", "atc_code", "surface", "start", "end"],
    ),
    (
        "disease_mentions.csv",
        &["unit_id", "unit_type", "paper_id", "mesh_code", "surface", "start", "end"],
    ),
    ("substances.csv", &["atc_code", "label", "level1", "level2", "level3", "level4"]),
    ("drugs.csv", &["name", "atc_code"]),
    ("diseases.csv", &["mesh_code", "label"]),
    ("symptoms.csv", &["mesh_code", "label"]),
];

pub fn export_schemas() -> BTreeMap<String, Vec<String>> {
    EXPORT_TABLES
        .iter()
        .map(|(name, cols)| (name.to_string(), cols.iter().map(|c| c.to_string()).collect()))
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self {
            headers: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

pub type Tables = BTreeMap<String, Table>;

/// Flattens corpus and annotations into the CSV tables consumed by the
/// mapping. Rows are sorted; entity tables hold only codes that are
/// mentioned.
pub fn export_annotations(
    annotations: &AnnotationStore,
    corpus: &CorpusStore,
    atc: &Gazetteer,
    mesh: &Gazetteer,
) -> Result<Tables> {
    let mut tables: Tables = EXPORT_TABLES
        .iter()
        .map(|(name, cols)| (name.to_string(), Table::new(cols)))
        .collect();
    let mut push = |name: &str, row: Vec<String>| {
        tables.get_mut(name).expect("declared table").rows.push(row);
    };

    for d in corpus.documents() {
        push(
            "papers.csv",
            vec![
                d.id.clone(),
                d.title.clone(),
                d.abstract_paragraphs.join("\n"),
                d.url.clone().unwrap_or_default(),
            ],
        );
    }
    let mut unit_paper: HashMap<&str, &str> = HashMap::new();
    for p in corpus.paragraphs() {
        unit_paper.insert(&p.id, &p.doc_id);
        push(
            "paragraphs.csv",
            vec![
                p.id.clone(),
                p.doc_id.clone(),
                p.section.clone(),
                p.ordinal.to_string(),
                p.text.clone(),
            ],
        );
    }
    for s in corpus.sentences() {
        let paper = corpus
            .paragraph(&s.paragraph_id)
            .map(|p| p.doc_id.clone())
            .unwrap_or_default();
        push(
            "sentences.csv",
            vec![
                s.id.clone(),
                s.paragraph_id.clone(),
                paper,
                s.start.to_string(),
                s.end.to_string(),
                s.text.clone(),
            ],
        );
    }
    let sentence_ids: BTreeSet<&str> = corpus.sentences().iter().map(|s| s.id.as_str()).collect();

    let mut drug_codes = BTreeSet::new();
    let mut disease_codes = BTreeSet::new();
    for m in annotations.mentions() {
        let sentence = is_sentence_id(&m.unit_id);
        let known = if sentence {
            sentence_ids.contains(m.unit_id.as_str())
        } else {
            unit_paper.contains_key(m.unit_id.as_str())
        };
        if !known {
            return Err(KgError::DanglingMention(m.unit_id.clone()));
        }
        let paper = unit_paper[crate::corpus::parent_paragraph(&m.unit_id)];
        let table = match m.kind {
            EntityKind::Drug => {
                drug_codes.insert(m.code.as_str());
                "drug_mentions.csv"
            }
            EntityKind::Disease => {
                disease_codes.insert(m.code.as_str());
                "disease_mentions.csv"
            }
        };
        push(
            table,
            vec![
                m.unit_id.clone(),
                if sentence { "sentence" } else { "paragraph" }.to_string(),
                paper.to_string(),
                m.code.clone(),
                m.surface.clone(),
                m.start.to_string(),
                m.end.to_string(),
            ],
        );
    }

    let mut names_by_code: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (surface, code) in atc.entries() {
        names_by_code.entry(code).or_default().push(surface);
    }
    for code in drug_codes {
        let label = atc.label(code).unwrap_or(code);
        let mut row = vec![code.to_string(), label.to_string()];
        match parse_atc(code) {
            Ok(parsed) => row.extend(parsed.levels()[..4].iter().map(|l| l.to_string())),
            Err(_) => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        push("substances.csv", row);
        let label_key = crate::annotate::normalize_surface(label);
        for name in names_by_code.get(code).into_iter().flatten() {
            if **name != label_key {
                push("drugs.csv", vec![name.to_string(), code.to_string()]);
            }
        }
    }
    for code in disease_codes {
        let row = vec![code.to_string(), mesh.label(code).unwrap_or(code).to_string()];
        if mesh.tree_numbers(code).iter().any(|t| t.starts_with(SYMPTOM_TREE)) {
            push("symptoms.csv", row.clone());
        }
        push("diseases.csv", row);
    }

    for table in tables.values_mut() {
        table.rows.sort();
        table.rows.dedup();
    }
    Ok(tables)
}

pub fn write_tables(tables: &Tables, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, table) in tables {
        let path = dir.join(name);
        let csv_err = |e: csv::Error| KgError::Csv {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(csv_err)?;
        w.write_record(&table.headers).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Reads the named CSV tables from `dir`; a missing file is reported as
/// [`KgError::MissingTable`].
pub fn read_tables<'a>(dir: &Path, names: impl IntoIterator<Item = &'a str>) -> Result<Tables> {
    let mut out = Tables::new();
    for name in names {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(KgError::MissingTable(name.to_string()));
        }
        let csv_err = |e: csv::Error| KgError::Csv {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut r = csv::Reader::from_path(&path).map_err(csv_err)?;
        let headers = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()
            .map_err(csv_err)?;
        out.insert(name.to_string(), Table { headers, rows });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{annotate_corpus, GazetteerRow, Mention};
    use crate::corpus::parse_document;

    fn fixture() -> (CorpusStore, Gazetteer, Gazetteer) {
        let doc = parse_document(
            r#"{"paper_id":"A1","metadata":{"title":"On \"chloroquine\", and more"},
                "abstract":[{"text":"Chloroquine for COVID-19."}],
                "body_text":[{"section":"Results","text":"Plaquenil and chloroquine. Fever was seen."}]}"#,
        )
        .unwrap();
        let corpus = CorpusStore::from_documents(vec![doc]).unwrap();
        let atc = Gazetteer::build(
            EntityKind::Drug,
            &[
                GazetteerRow::new("P01BA01", "chloroquine", ""),
                GazetteerRow::new("P01BA02", "hydroxychloroquine", "Plaquenil"),
            ],
        )
        .unwrap();
        let mut fever = GazetteerRow::new("D005334", "Fever", "");
        fever.tree_numbers = "C23.888.119.344".into();
        let mesh = Gazetteer::build(
            EntityKind::Disease,
            &[GazetteerRow::new("C000657245", "COVID-19", ""), fever],
        )
        .unwrap();
        (corpus, atc, mesh)
    }

    #[test]
    fn counts_and_entity_tables() {
        let (corpus, atc, mesh) = fixture();
        let ann = annotate_corpus(&corpus, &atc, &mesh);
        let tables = export_annotations(&ann, &corpus, &atc, &mesh).unwrap();
        let rows = |n: &str| tables[n].rows.len();
        assert_eq!(rows("papers.csv"), 1);
        assert_eq!(rows("paragraphs.csv"), 2);
        // 3 drug mentions at paragraph level, each projected onto a sentence.
        assert_eq!(rows("drug_mentions.csv"), 6);
        assert_eq!(rows("disease_mentions.csv"), 4);
        assert_eq!(tables["substances.csv"].rows[1][2..], ["P", "P01", "P01B", "P01BA"]);
        assert_eq!(tables["drugs.csv"].rows, vec![vec!["plaquenil", "P01BA02"]]);
        assert_eq!(tables["symptoms.csv"].rows, vec![vec!["D005334", "Fever"]]);
    }

    #[test]
    fn csv_round_trip_with_quotes() {
        let (corpus, atc, mesh) = fixture();
        let ann = annotate_corpus(&corpus, &atc, &mesh);
        let tables = export_annotations(&ann, &corpus, &atc, &mesh).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_tables(&tables, dir.path()).unwrap();
        let back = read_tables(dir.path(), EXPORT_TABLES.iter().map(|(n, _)| *n)).unwrap();
        assert_eq!(back, tables);
        assert_eq!(back["papers.csv"].rows[0][1], "On \"chloroquine\", and more");
        assert!(matches!(
            read_tables(dir.path(), ["nope.csv"]),
            Err(KgError::MissingTable(_))
        ));
    }

    #[test]
    fn dangling_mention() {
        let (corpus, atc, mesh) = fixture();
        let ann = AnnotationStore::from_mentions(vec![Mention {
            unit_id: "A1#p9".into(),
            start: 0,
            end: 1,
            surface: "x".into(),
            code: "P01BA01".into(),
            kind: EntityKind::Drug,
        }]);
        assert!(matches!(
            export_annotations(&ann, &corpus, &atc, &mesh),
            Err(KgError::DanglingMention(u)) if u == "A1#p9"
        ));
    }
}
