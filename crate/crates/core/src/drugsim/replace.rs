use serde::{Deserialize, Serialize};

use super::{AnnIndex, DrugSimError, Result};
use crate::annotate::Gazetteer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    pub atc_code: String,
    pub label: String,
    pub similarity: f64,
}

/// Ranks indexed drugs by cosine similarity to the drug named by `keyword`
/// (an ATC code, label or synonym). The query drug itself is never returned.
pub fn query_replacements(
    index: &AnnIndex,
    gazetteer: &Gazetteer,
    keyword: &str,
    k: usize,
) -> Result<Vec<Replacement>> {
    let code = gazetteer
        .resolve(keyword)
        .ok_or_else(|| DrugSimError::UnknownDrug(keyword.to_string()))?;
    let item = index
        .position(code)
        .ok_or_else(|| DrugSimError::UnknownDrug(keyword.to_string()))?;
    Ok(index
        .neighbors(item, k)
        .into_iter()
        .map(|(j, similarity)| {
            let atc_code = index.ids()[j].clone();
            let label = gazetteer.label(&atc_code).unwrap_or(&atc_code).to_string();
            Replacement {
                atc_code,
                label,
                similarity,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{EntityKind, GazetteerRow};
    use crate::drugsim::{AnnConfig, DrugVector};

    fn gazetteer() -> Gazetteer {
        Gazetteer::build(
            EntityKind::Drug,
            &[
                GazetteerRow::new("P01BA01", "chloroquine", ""),
                GazetteerRow::new("P01BA02", "hydroxychloroquine", "Plaquenil"),
                GazetteerRow::new("J01FA10", "azithromycin", ""),
            ],
        )
        .unwrap()
    }

    fn dv(drug: &str, weights: &[f64]) -> DrugVector {
        DrugVector {
            drug: drug.into(),
            weights: weights.to_vec(),
        }
    }

    #[test]
    fn own_code_returns_other_drug() {
        let idx = AnnIndex::build(
            &[dv("P01BA01", &[1.0, 0.0]), dv("P01BA02", &[0.6, 0.8])],
            AnnConfig::default(),
        )
        .unwrap();
        let r = query_replacements(&idx, &gazetteer(), "P01BA01", 1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].atc_code, "P01BA02");
        assert_eq!(r[0].label, "hydroxychloroquine");
        assert!((r[0].similarity - 0.6).abs() < 1e-12);
    }

    #[test]
    fn keyword_resolution_and_errors() {
        let idx = AnnIndex::build(
            &[
                dv("P01BA01", &[1.0, 0.0]),
                dv("P01BA02", &[1.0, 0.0]),
                dv("J01FA10", &[0.0, 1.0]),
            ],
            AnnConfig::default(),
        )
        .unwrap();
        let g = gazetteer();
        let r = query_replacements(&idx, &g, "Chloroquine", 2).unwrap();
        assert_eq!(r[0].atc_code, "P01BA02");
        assert!((r[0].similarity - 1.0).abs() < 1e-9);
        let r = query_replacements(&idx, &g, "plaquenil", 5).unwrap();
        assert!(r.iter().all(|x| x.atc_code != "P01BA02"));
        assert!(query_replacements(&idx, &g, "aspirin", 1).is_err());
        assert!(query_replacements(&idx, &g, "P01BA01", 0).unwrap().is_empty());
    }
}
