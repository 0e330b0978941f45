use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use d4c_core::annotate::{AnnotationStore, EntityKind, Gazetteer};
use d4c_core::corpus::CorpusStore;
use d4c_core::diseasesim::DiseaseDistance;
use d4c_core::drugsim::AnnIndex;
use d4c_core::kgmap::{parse_ntriples, Graph};

use crate::layout::Layout;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("missing artifact {0}")]
    Missing(PathBuf),
    #[error("cannot load {path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

fn invalid(path: &Path, e: impl std::fmt::Display) -> LoadError {
    LoadError::Invalid {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn require(path: PathBuf) -> Result<PathBuf, LoadError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(LoadError::Missing(path))
    }
}

/// Paragraph-level co-mention counts between any two codes.
#[derive(Debug, Default)]
pub struct CoMentions {
    /// code -> sorted paragraph ids mentioning it.
    postings: HashMap<String, Vec<String>>,
    /// paragraph id -> codes mentioned in it.
    codes: HashMap<String, BTreeSet<(EntityKind, String)>>,
}

impl CoMentions {
    pub fn new(annotations: &AnnotationStore) -> Self {
        let mut codes: HashMap<String, BTreeSet<(EntityKind, String)>> = HashMap::new();
        let mut postings: HashMap<String, BTreeSet<String>> = HashMap::new();
        for m in annotations.paragraph_mentions() {
            codes
                .entry(m.unit_id.clone())
                .or_default()
                .insert((m.kind, m.code.clone()));
            postings.entry(m.code.clone()).or_default().insert(m.unit_id.clone());
        }
        Self {
            postings: postings
                .into_iter()
                .map(|(c, ps)| (c, ps.into_iter().collect()))
                .collect(),
            codes,
        }
    }

    pub fn paragraphs(&self, code: &str) -> &[String] {
        self.postings.get(code).map_or(&[], Vec::as_slice)
    }

    /// Codes of `kind` sharing a paragraph with `code`, by count descending
    /// then code. `code` itself is excluded.
    pub fn ranked(&self, code: &str, kind: EntityKind) -> Vec<(String, usize)> {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for p in self.paragraphs(code) {
            for (k, other) in &self.codes[p] {
                if *k == kind && other != code {
                    *counts.entry(other).or_default() += 1;
                }
            }
        }
        let mut out: Vec<(String, usize)> = counts.into_iter().map(|(c, n)| (c.to_string(), n)).collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

/// Everything the API serves, loaded once and never mutated.
pub struct AppState {
    pub corpus: CorpusStore,
    pub annotations: AnnotationStore,
    pub atc: Gazetteer,
    pub mesh: Gazetteer,
    pub comentions: CoMentions,
    pub drug_index: Option<AnnIndex>,
    pub disease_distances: Option<Vec<DiseaseDistance>>,
    pub graph: Option<Graph>,
}

impl AppState {
    pub fn new(corpus: CorpusStore, annotations: AnnotationStore, atc: Gazetteer, mesh: Gazetteer) -> Self {
        let comentions = CoMentions::new(&annotations);
        Self {
            corpus,
            annotations,
            atc,
            mesh,
            comentions,
            drug_index: None,
            disease_distances: None,
            graph: None,
        }
    }

    /// Loads the artifact directory. Corpus, gazetteers and mentions are
    /// required; the drug index, disease distances and graph are served
    /// when present.
    pub fn load(layout: &Layout) -> Result<Self, LoadError> {
        let corpus_dir = require(layout.corpus())?;
        let corpus = CorpusStore::load(&corpus_dir).map_err(|e| invalid(&corpus_dir, e))?;
        let atc_path = require(layout.atc())?;
        let atc = Gazetteer::from_csv_path(EntityKind::Drug, &atc_path).map_err(|e| invalid(&atc_path, e))?;
        let mesh_path = require(layout.mesh())?;
        let mesh =
            Gazetteer::from_csv_path(EntityKind::Disease, &mesh_path).map_err(|e| invalid(&mesh_path, e))?;
        let mentions = require(layout.mentions())?;
        let annotations = AnnotationStore::read_jsonl(&mentions).map_err(|e| invalid(&mentions, e))?;
        let mut state = Self::new(corpus, annotations, atc, mesh);

        let ann = layout.ann();
        if ann.exists() {
            let bytes = fs::read(&ann).map_err(|e| invalid(&ann, e))?;
            state.drug_index = Some(AnnIndex::from_bytes(&bytes).map_err(|e| invalid(&ann, e))?);
        }
        let distances = layout.distances();
        if distances.exists() {
            let text = fs::read_to_string(&distances).map_err(|e| invalid(&distances, e))?;
            state.disease_distances = Some(serde_json::from_str(&text).map_err(|e| invalid(&distances, e))?);
        }
        let kg = layout.kg_file();
        if kg.exists() {
            let text = fs::read_to_string(&kg).map_err(|e| invalid(&kg, e))?;
            state.graph = Some(Graph::new(parse_ntriples(&text).map_err(|e| invalid(&kg, e))?));
        }
        Ok(state)
    }

    /// Resolves a keyword against the drug gazetteer, then the disease one.
    pub fn resolve(&self, keyword: &str) -> Option<(EntityKind, &str)> {
        self.atc
            .resolve(keyword)
            .map(|c| (EntityKind::Drug, c))
            .or_else(|| self.mesh.resolve(keyword).map(|c| (EntityKind::Disease, c)))
    }

    pub fn label(&self, kind: EntityKind, code: &str) -> String {
        let gaz = match kind {
            EntityKind::Drug => &self.atc,
            EntityKind::Disease => &self.mesh,
        };
        gaz.label(code).unwrap_or(code).to_string()
    }
}
