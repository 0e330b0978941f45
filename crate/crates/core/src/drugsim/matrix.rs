use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DrugSimError, Result};
use crate::annotate::{AnnotationStore, EntityKind};

pub const DRUGS_FILE: &str = "drugs.csv";
pub const DISEASES_FILE: &str = "diseases.csv";
pub const COUNTS_FILE: &str = "counts.csv";

/// How co-mentions inside one paragraph are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountMode {
    /// Each (drug, disease) pair counts once per paragraph.
    #[default]
    Paragraph,
    /// Product of the two mention counts within the paragraph.
    MentionPairs,
}

/// Drugs x diseases paragraph co-occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooccurrenceMatrix {
    drugs: Vec<String>,
    diseases: Vec<String>,
    counts: Vec<u32>,
    excluded_drugs: Vec<String>,
}

impl CooccurrenceMatrix {
    /// Dense constructor. Codes must be strictly increasing and `counts`
    /// must be `drugs.len()` rows of `diseases.len()` cells.
    pub fn from_counts(drugs: Vec<String>, diseases: Vec<String>, counts: &[Vec<u32>]) -> Result<Self> {
        let increasing = |v: &[String]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&drugs) || !increasing(&diseases) {
            return Err(DrugSimError::Malformed("codes must be sorted and distinct".into()));
        }
        if counts.len() != drugs.len() {
            return Err(DrugSimError::DimensionMismatch(drugs.len(), counts.len()));
        }
        if let Some(row) = counts.iter().find(|r| r.len() != diseases.len()) {
            return Err(DrugSimError::DimensionMismatch(diseases.len(), row.len()));
        }
        Ok(Self {
            counts: counts.concat(),
            drugs,
            diseases,
            excluded_drugs: Vec::new(),
        })
    }

    pub fn drugs(&self) -> &[String] {
        &self.drugs
    }

    pub fn diseases(&self) -> &[String] {
        &self.diseases
    }

    /// Drugs that were mentioned but never share a paragraph with a disease.
    pub fn excluded_drugs(&self) -> &[String] {
        &self.excluded_drugs
    }

    pub fn count(&self, drug: usize, disease: usize) -> u32 {
        self.counts[drug * self.diseases.len() + disease]
    }

    pub fn row(&self, drug: usize) -> &[u32] {
        let m = self.diseases.len();
        &self.counts[drug * m..(drug + 1) * m]
    }

    pub fn drug_index(&self, code: &str) -> Option<usize> {
        self.drugs.binary_search_by(|d| d.as_str().cmp(code)).ok()
    }

    pub fn disease_index(&self, code: &str) -> Option<usize> {
        self.diseases.binary_search_by(|d| d.as_str().cmp(code)).ok()
    }

    /// Writes `drugs.csv`, `diseases.csv` and `counts.csv` (sparse
    /// `row,col,count` triplets).
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let csv_err = |e: csv::Error| DrugSimError::Malformed(e.to_string());
        for (file, header, codes) in [
            (DRUGS_FILE, "atc_code", &self.drugs),
            (DISEASES_FILE, "mesh_code", &self.diseases),
        ] {
            let mut w = csv::Writer::from_path(dir.join(file)).map_err(csv_err)?;
            w.write_record(["index", header]).map_err(csv_err)?;
            for (i, c) in codes.iter().enumerate() {
                w.write_record([i.to_string().as_str(), c]).map_err(csv_err)?;
            }
            w.flush()?;
        }
        let mut w = csv::Writer::from_path(dir.join(COUNTS_FILE)).map_err(csv_err)?;
        w.write_record(["row", "col", "count"]).map_err(csv_err)?;
        for i in 0..self.drugs.len() {
            for (j, &c) in self.row(i).iter().enumerate() {
                if c > 0 {
                    w.write_record([i.to_string(), j.to_string(), c.to_string()])
                        .map_err(csv_err)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(dir: &Path) -> Result<Self> {
        let malformed = |e: csv::Error| DrugSimError::Malformed(e.to_string());
        let read_codes = |file: &str| -> Result<Vec<String>> {
            let mut r = csv::Reader::from_path(dir.join(file)).map_err(malformed)?;
            r.records()
                .map(|rec| {
                    let rec = rec.map_err(malformed)?;
                    Ok(rec.get(1).unwrap_or_default().to_string())
                })
                .collect()
        };
        let drugs = read_codes(DRUGS_FILE)?;
        let diseases = read_codes(DISEASES_FILE)?;
        let mut counts = vec![0u32; drugs.len() * diseases.len()];
        let mut r = csv::Reader::from_path(dir.join(COUNTS_FILE)).map_err(malformed)?;
        for rec in r.records() {
            let rec = rec.map_err(malformed)?;
            let field = |i: usize| -> Result<usize> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| DrugSimError::Malformed(format!("bad counts row {rec:?}")))
            };
            let (i, j, c) = (field(0)?, field(1)?, field(2)?);
            if i >= drugs.len() || j >= diseases.len() {
                return Err(DrugSimError::Malformed(format!("cell ({i},{j}) out of range")));
            }
            counts[i * diseases.len() + j] = c as u32;
        }
        Ok(Self {
            drugs,
            diseases,
            counts,
            excluded_drugs: Vec::new(),
        })
    }
}

pub fn build_matrix(annotations: &AnnotationStore, mode: CountMode) -> Result<CooccurrenceMatrix> {
    // paragraph -> code -> mention count
    let mut per_paragraph: BTreeMap<&str, [BTreeMap<&str, u32>; 2]> = BTreeMap::new();
    for m in annotations.paragraph_mentions() {
        let slot = match m.kind {
            EntityKind::Drug => 0,
            EntityKind::Disease => 1,
        };
        *per_paragraph.entry(&m.unit_id).or_default()[slot]
            .entry(&m.code)
            .or_default() += 1;
    }

    let mut pairs: BTreeMap<(&str, &str), u32> = BTreeMap::new();
    let mut mentioned_drugs: BTreeSet<&str> = BTreeSet::new();
    for [drugs, diseases] in per_paragraph.values() {
        mentioned_drugs.extend(drugs.keys());
        for (&drug, &nd) in drugs {
            for (&disease, &ns) in diseases {
                let inc = match mode {
                    CountMode::Paragraph => 1,
                    CountMode::MentionPairs => nd * ns,
                };
                *pairs.entry((drug, disease)).or_default() += inc;
            }
        }
    }
    if pairs.is_empty() {
        return Err(DrugSimError::NoCooccurrences);
    }

    let drugs: Vec<String> = pairs
        .keys()
        .map(|(d, _)| *d)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let diseases: Vec<String> = pairs
        .keys()
        .map(|(_, s)| *s)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_string)
        .collect();
    let excluded_drugs = mentioned_drugs
        .into_iter()
        .filter(|d| drugs.binary_search_by(|x| x.as_str().cmp(d)).is_err())
        .map(str::to_string)
        .collect();

    let mut matrix = CooccurrenceMatrix {
        counts: vec![0; drugs.len() * diseases.len()],
        drugs,
        diseases,
        excluded_drugs,
    };
    let m = matrix.diseases.len();
    for ((drug, disease), c) in pairs {
        let i = matrix.drug_index(drug).expect("drug indexed");
        let j = matrix.disease_index(disease).expect("disease indexed");
        matrix.counts[i * m + j] = c;
    }
    Ok(matrix)
}

/// A drug described by TF-IDF weighted co-mentioned diseases, L2-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrugVector {
    pub drug: String,
    pub weights: Vec<f64>,
}

/// `w(i,j) = count(i,j) * (ln((1+N)/(1+df_j)) + 1)`, rows L2-normalized.
pub fn tfidf_transform(matrix: &CooccurrenceMatrix) -> Vec<DrugVector> {
    let n = matrix.drugs.len();
    let m = matrix.diseases.len();
    let idf: Vec<f64> = (0..m)
        .map(|j| {
            let df = (0..n).filter(|&i| matrix.count(i, j) > 0).count();
            ((1.0 + n as f64) / (1.0 + df as f64)).ln() + 1.0
        })
        .collect();
    matrix
        .drugs
        .iter()
        .enumerate()
        .map(|(i, drug)| {
            let mut weights: Vec<f64> = matrix
                .row(i)
                .iter()
                .zip(&idf)
                .map(|(&c, &w)| f64::from(c) * w)
                .collect();
            let norm = weights.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                weights.iter_mut().for_each(|x| *x /= norm);
            }
            DrugVector {
                drug: drug.clone(),
                weights,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::Mention;

    fn mention(unit: &str, code: &str, kind: EntityKind, start: usize) -> Mention {
        Mention {
            unit_id: unit.into(),
            start,
            end: start + 1,
            surface: "x".into(),
            code: code.into(),
            kind,
        }
    }

    #[test]
    fn single_pair() {
        let store = AnnotationStore::from_mentions(vec![
            mention("A#p0", "P01BA01", EntityKind::Drug, 0),
            mention("A#p0", "C000657245", EntityKind::Disease, 5),
        ]);
        let m = build_matrix(&store, CountMode::Paragraph).unwrap();
        assert_eq!(m.drugs(), ["P01BA01"]);
        assert_eq!(m.diseases(), ["C000657245"]);
        assert_eq!(m.count(0, 0), 1);
    }

    #[test]
    fn repeated_drug_counts_once_per_paragraph() {
        let store = AnnotationStore::from_mentions(vec![
            mention("A#p0", "P01BA01", EntityKind::Drug, 0),
            mention("A#p0", "P01BA01", EntityKind::Drug, 10),
            mention("A#p0", "D008288", EntityKind::Disease, 5),
            // sentence-level copies are ignored
            mention("A#p0#s0", "P01BA01", EntityKind::Drug, 0),
            mention("A#p0#s0", "D008288", EntityKind::Disease, 5),
        ]);
        assert_eq!(build_matrix(&store, CountMode::Paragraph).unwrap().count(0, 0), 1);
        assert_eq!(build_matrix(&store, CountMode::MentionPairs).unwrap().count(0, 0), 2);
    }

    #[test]
    fn no_cooccurrence_and_exclusions() {
        let store = AnnotationStore::from_mentions(vec![
            mention("A#p0", "P01BA01", EntityKind::Drug, 0),
            mention("A#p1", "D008288", EntityKind::Disease, 0),
        ]);
        assert!(matches!(
            build_matrix(&store, CountMode::Paragraph),
            Err(DrugSimError::NoCooccurrences)
        ));
        let store = AnnotationStore::from_mentions(vec![
            mention("A#p0", "P01BA01", EntityKind::Drug, 0),
            mention("A#p0", "D008288", EntityKind::Disease, 3),
            mention("A#p1", "J05AR10", EntityKind::Drug, 0),
        ]);
        let m = build_matrix(&store, CountMode::Paragraph).unwrap();
        assert_eq!(m.excluded_drugs(), ["J05AR10"]);
    }

    fn matrix(rows: &[&[u32]]) -> CooccurrenceMatrix {
        CooccurrenceMatrix {
            drugs: (0..rows.len()).map(|i| format!("D{i}")).collect(),
            diseases: (0..rows[0].len()).map(|j| format!("S{j}")).collect(),
            counts: rows.iter().flat_map(|r| r.iter().copied()).collect(),
            excluded_drugs: vec![],
        }
    }

    #[test]
    fn tfidf_diagonal() {
        let v = tfidf_transform(&matrix(&[&[2, 0], &[0, 3]]));
        assert_eq!(v[0].weights, vec![1.0, 0.0]);
        assert_eq!(v[1].weights, vec![0.0, 1.0]);
    }

    #[test]
    fn ubiquitous_disease_has_unit_idf() {
        // df = N for column 0 gives idf 1; column 1 (df 1 of 2) gives ln(3/2)+1.
        let v = tfidf_transform(&matrix(&[&[1, 1], &[1, 0]]));
        let idf1 = (1.5f64).ln() + 1.0;
        let norm = (1.0 + idf1 * idf1).sqrt();
        assert!((v[0].weights[0] - 1.0 / norm).abs() < 1e-15);
        assert!((v[0].weights[1] - idf1 / norm).abs() < 1e-15);
        assert_eq!(v[1].weights, vec![1.0, 0.0]);
    }

    #[test]
    fn csv_round_trip() {
        let m = matrix(&[&[2, 0, 1], &[0, 3, 0]]);
        let dir = tempfile::tempdir().unwrap();
        m.write_csv(dir.path()).unwrap();
        assert_eq!(CooccurrenceMatrix::read_csv(dir.path()).unwrap(), m);
    }
}
