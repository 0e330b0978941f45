use std::path::{Path, PathBuf};

use anyhow::Context;
use d4c_core::diseasesim::EmbeddingConfig;
use d4c_core::drugsim::{AnnConfig, CountMode};
use d4c_core::topics::TopicConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub atc: PathBuf,
    pub mesh: PathBuf,
    pub artifacts: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: "corpus".into(),
            atc: "atc.csv".into(),
            mesh: "mesh.csv".into(),
            artifacts: "artifacts".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrugsConfig {
    pub count_mode: CountMode,
    pub k_min: usize,
    pub k_max: usize,
    pub ann: AnnConfig,
}

impl Default for DrugsConfig {
    fn default() -> Self {
        Self {
            count_mode: CountMode::Paragraph,
            k_min: 2,
            k_max: 10,
            ann: AnnConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiseasesConfig {
    /// MeSH codes to model; empty means every disease with enough contexts.
    pub diseases: Vec<String>,
    /// Optional JSON file `{"diseases": {code: {"contexts": [...]}}}` used
    /// instead of the annotated corpus paragraphs.
    pub contexts: Option<PathBuf>,
    pub min_contexts: usize,
    /// Disease whose sample supplies the reference terms.
    pub reference: Option<String>,
    pub sample_size: usize,
    pub sample_seed: u64,
    pub terms: usize,
    pub embedding: EmbeddingConfig,
}

impl Default for DiseasesConfig {
    fn default() -> Self {
        Self {
            diseases: Vec::new(),
            contexts: None,
            min_contexts: 1,
            reference: None,
            sample_size: 200,
            sample_seed: 1,
            terms: 25,
            embedding: EmbeddingConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KgConfig {
    /// Mapping document; the built-in mapping when absent.
    pub mapping: Option<PathBuf>,
    /// Also write `kg.ttl`.
    pub turtle: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub addr: String,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1:8080".into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub topics: TopicConfig,
    pub drugs: DrugsConfig,
    pub diseases: DiseasesConfig,
    pub kg: KgConfig,
    pub serve: ServeConfig,
}

impl PipelineConfig {
    /// Reads a TOML config. Relative paths are taken from the file's
    /// directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.paths.corpus);
        rebase(&mut cfg.paths.atc);
        rebase(&mut cfg.paths.mesh);
        rebase(&mut cfg.paths.artifacts);
        if let Some(p) = cfg.diseases.contexts.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.kg.mapping.as_mut() {
            rebase(p);
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d4c.toml");
        std::fs::write(&path, "[paths]\ncorpus = \"docs\"\n[topics]\niterations = 50\n[drugs.ann]\ntree_count = 3\n").unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.paths.corpus, dir.path().join("docs"));
        assert_eq!(cfg.topics.iterations, 50);
        assert_eq!(cfg.topics.beta, TopicConfig::default().beta);
        assert_eq!(cfg.drugs.ann.tree_count, 3);
        assert_eq!(cfg.drugs.k_max, 10);
    }

    #[test]
    fn unknown_keys_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d4c.toml");
        std::fs::write(&path, "[drugs]\nk_mx = 3\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = PipelineConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), cfg);
    }
}
