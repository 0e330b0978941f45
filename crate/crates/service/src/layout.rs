//! Where each stage keeps its files under the artifact root.

use std::path::{Path, PathBuf};

pub const CORPUS_DIR: &str = "corpus";
pub const GAZETTEER_DIR: &str = "gazetteers";
pub const ATC_FILE: &str = "atc.csv";
pub const MESH_FILE: &str = "mesh.csv";
pub const ANNOTATIONS_DIR: &str = "annotations";
pub const TOPICS_DIR: &str = "topics";
pub const DRUGS_DIR: &str = "drugs";
pub const ANN_FILE: &str = "ann.bin";
pub const CLUSTERS_FILE: &str = "clusters.json";
pub const DISEASES_DIR: &str = "diseases";
pub const TERMS_FILE: &str = "terms.csv";
pub const DISTANCES_FILE: &str = "distances.json";
pub const MODELS_DIR: &str = "models";
pub const KG_DIR: &str = "kg";
pub const TABLES_DIR: &str = "tables";
pub const KG_FILE: &str = "kg.nt";
pub const METADATA_FILE: &str = "metadata.json";

#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn corpus(&self) -> PathBuf {
        self.root.join(CORPUS_DIR)
    }

    pub fn atc(&self) -> PathBuf {
        self.root.join(GAZETTEER_DIR).join(ATC_FILE)
    }

    pub fn mesh(&self) -> PathBuf {
        self.root.join(GAZETTEER_DIR).join(MESH_FILE)
    }

    pub fn mentions(&self) -> PathBuf {
        self.root.join(ANNOTATIONS_DIR).join(d4c_core::annotate::MENTIONS_FILE)
    }

    pub fn topics(&self) -> PathBuf {
        self.root.join(TOPICS_DIR)
    }

    pub fn drugs(&self) -> PathBuf {
        self.root.join(DRUGS_DIR)
    }

    pub fn ann(&self) -> PathBuf {
        self.drugs().join(ANN_FILE)
    }

    pub fn diseases(&self) -> PathBuf {
        self.root.join(DISEASES_DIR)
    }

    pub fn distances(&self) -> PathBuf {
        self.diseases().join(DISTANCES_FILE)
    }

    pub fn kg(&self) -> PathBuf {
        self.root.join(KG_DIR)
    }

    pub fn tables(&self) -> PathBuf {
        self.kg().join(TABLES_DIR)
    }

    pub fn kg_file(&self) -> PathBuf {
        self.kg().join(KG_FILE)
    }
}
