use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use d4c_core::annotate::{annotate_corpus, AnnotationStore, EntityKind, Gazetteer};
use d4c_core::corpus::{self, CorpusStore};
use d4c_core::diseasesim::{
    compare_diseases, extract_terms, sample_paragraphs, train_disease_model, write_word2vec, Aggregate,
    DiseaseDistance, TermList,
};
use d4c_core::drugsim::{agglomerate, build_matrix, select_clusters, tfidf_transform, AnnIndex};
use d4c_core::kgmap::{
    builtin_prefixes, export_annotations, export_schemas, generate_triples, parse_mapping, parse_ntriples,
    read_tables, serialize_ntriples, serialize_turtle, validate_columns, write_tables, Graph, PatternQuery,
    QueryResult, DEFAULT_MAPPING, EXPORT_TABLES,
};
use d4c_core::text::{content_words, words};
use d4c_core::topics::{train_topic_model, write_theta_jsonl, LabeledParagraph, THETA_FILE};
use d4c_service::layout::{Layout, METADATA_FILE};
use serde_json::{json, Value};

use crate::config::PipelineConfig;

/// A prerequisite file that an earlier stage should have produced.
#[derive(Debug)]
pub struct MissingArtifact {
    pub path: PathBuf,
    pub producer: &'static str,
}

impl fmt::Display for MissingArtifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "missing artifact {} (run `d4c {}` first)",
            self.path.display(),
            self.producer
        )
    }
}

impl std::error::Error for MissingArtifact {}

fn require(path: PathBuf, producer: &'static str) -> anyhow::Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(MissingArtifact { path, producer }.into())
    }
}

fn documents_file(layout: &Layout) -> anyhow::Result<PathBuf> {
    require(layout.corpus().join(corpus::DOCUMENTS_FILE), "ingest")
}

fn mentions_file(layout: &Layout) -> anyhow::Result<PathBuf> {
    require(layout.mentions(), "annotate")
}

fn load_corpus(layout: &Layout) -> anyhow::Result<CorpusStore> {
    documents_file(layout)?;
    CorpusStore::load(&layout.corpus()).context("cannot load corpus")
}

fn load_mentions(layout: &Layout) -> anyhow::Result<AnnotationStore> {
    let path = mentions_file(layout)?;
    AnnotationStore::read_jsonl(&path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_gazetteers(layout: &Layout) -> anyhow::Result<(Gazetteer, Gazetteer)> {
    let atc = require(layout.atc(), "annotate")?;
    let mesh = require(layout.mesh(), "annotate")?;
    Ok((
        Gazetteer::from_csv_path(EntityKind::Drug, &atc)?,
        Gazetteer::from_csv_path(EntityKind::Disease, &mesh)?,
    ))
}

/// What a stage reports: a one-line human summary and the same facts as
/// JSON.
pub struct Summary {
    pub stage: &'static str,
    pub line: String,
    pub facts: Value,
}

fn write_metadata(dir: &Path, stage: &str, config: &PipelineConfig, facts: &Value) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    let meta = json!({"stage": stage, "config": config, "outputs": facts});
    fs::write(dir.join(METADATA_FILE), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

fn finish(
    stage: &'static str,
    dir: &Path,
    config: &PipelineConfig,
    line: String,
    facts: Value,
) -> anyhow::Result<Summary> {
    write_metadata(dir, stage, config, &facts)?;
    Ok(Summary { stage, line, facts })
}

pub fn ingest(config: &PipelineConfig, layout: &Layout) -> anyhow::Result<Summary> {
    let input = &config.paths.corpus;
    if !input.is_dir() {
        bail!("corpus directory {} does not exist", input.display());
    }
    let (store, stats) = corpus::ingest(input)?;
    store.write_to(&layout.corpus())?;
    finish(
        "ingest",
        &layout.corpus(),
        config,
        format!(
            "ingest: {} documents, {} paragraphs, {} sentences",
            stats.documents, stats.paragraphs, stats.sentences
        ),
        json!(stats),
    )
}

pub fn annotate(config: &PipelineConfig, layout: &Layout) -> anyhow::Result<Summary> {
    let store = load_corpus(layout)?;
    let read = |p: &Path| fs::read_to_string(p).with_context(|| format!("cannot read gazetteer {}", p.display()));
    let atc_text = read(&config.paths.atc)?;
    let mesh_text = read(&config.paths.mesh)?;
    let atc = Gazetteer::from_csv_str(EntityKind::Drug, &atc_text)
        .with_context(|| format!("invalid gazetteer {}", config.paths.atc.display()))?;
    let mesh = Gazetteer::from_csv_str(EntityKind::Disease, &mesh_text)
        .with_context(|| format!("invalid gazetteer {}", config.paths.mesh.display()))?;
    // The service and later stages read the gazetteers from the artifacts.
    fs::create_dir_all(layout.atc().parent().expect("gazetteer dir"))?;
    fs::write(layout.atc(), &atc_text)?;
    fs::write(layout.mesh(), &mesh_text)?;

    let annotations = annotate_corpus(&store, &atc, &mesh);
    let out = layout.mentions();
    fs::create_dir_all(out.parent().expect("annotations dir"))?;
    annotations.write_jsonl(&out)?;
    let s = annotations.summary();
    finish(
        "annotate",
        out.parent().expect("annotations dir"),
        config,
        format!(
            "annotate: {} paragraph mentions, {} sentence mentions, {} drugs, {} diseases",
            s.paragraph_mentions, s.sentence_mentions, s.drugs, s.diseases
        ),
        json!(s),
    )
}

pub fn topics_train(config: &PipelineConfig, layout: &Layout) -> anyhow::Result<Summary> {
    let store = load_corpus(layout)?;
    let annotations = load_mentions(layout)?;
    let drug_codes = annotations.paragraph_codes(EntityKind::Drug);
    let mut units = Vec::new();
    let mut training = Vec::new();
    for p in store.paragraphs() {
        let tokens = content_words(&p.text);
        if tokens.is_empty() {
            continue;
        }
        let labels = drug_codes
            .get(p.id.as_str())
            .map(|codes| codes.iter().map(|c| c.to_string()).collect())
            .unwrap_or_default();
        training.push(LabeledParagraph {
            tokens: tokens.clone(),
            labels,
        });
        units.push((p.id.clone(), tokens));
    }
    let model = train_topic_model(&training, &config.topics)?;
    let dir = layout.topics();
    model.write_to(&dir)?;
    let dists = units
        .iter()
        .map(|(id, tokens)| model.infer_distribution(id, tokens))
        .collect::<Result<Vec<_>, _>>()?;
    write_theta_jsonl(&dir.join(THETA_FILE), &dists)?;
    finish(
        "topics-train",
        &dir,
        config,
        format!(
            "topics-train: {} topics over {} words, {} paragraphs",
            model.num_topics(),
            model.vocabulary().len(),
            dists.len()
        ),
        json!({"topics": model.num_topics(), "vocabulary": model.vocabulary().len(), "paragraphs": dists.len()}),
    )
}

pub fn drugs_cluster(config: &PipelineConfig, layout: &Layout) -> anyhow::Result<Summary> {
    let annotations = load_mentions(layout)?;
    let (atc, _) = load_gazetteers(layout)?;
    let matrix = build_matrix(&annotations, config.drugs.count_mode)?;
    let dir = layout.drugs();
    matrix.write_csv(&dir)?;
    let vectors = tfidf_transform(&matrix);
    let n = vectors.len();

    let k_max = config.drugs.k_max.min(n.saturating_sub(1));
    let clusters = if n >= 3 && config.drugs.k_min <= k_max {
        let dendrogram = agglomerate(&vectors)?;
        let selection = select_clusters(&dendrogram, &vectors, config.drugs.k_min, k_max)?;
        let members: Vec<Value> = vectors
            .iter()
            .zip(&selection.assignment)
            .map(|(v, c)| json!({"atc_code": v.drug, "label": atc.label(&v.drug).unwrap_or(&v.drug), "cluster": c}))
            .collect();
        json!({"k": selection.k, "scores": selection.scores, "members": members, "merges": dendrogram.merges})
    } else {
        Value::Null
    };
    fs::write(
        dir.join(d4c_service::layout::CLUSTERS_FILE),
        serde_json::to_string_pretty(&clusters)? + "\n",
    )?;

    let index = AnnIndex::build(&vectors, config.drugs.ann)?;
    fs::write(layout.ann(), index.to_bytes())?;
    let k = clusters.get("k").cloned().unwrap_or(Value::Null);
    finish(
        "drugs-cluster",
        &dir,
        config,
        format!(
            "drugs-cluster: {n} drugs x {} diseases, {} clusters, {} excluded",
            matrix.diseases().len(),
            if k.is_null() { "no".to_string() } else { k.to_string() },
            matrix.excluded_drugs().len()
        ),
        json!({"drugs": n, "diseases": matrix.diseases().len(), "clusters": k, "excluded": matrix.excluded_drugs()}),
    )
}

/// Context paragraphs per disease, from a contexts file or the corpus.
fn disease_contexts(config: &PipelineConfig, layout: &Layout) -> anyhow::Result<BTreeMap<String, Vec<String>>> {
    if let Some(path) = &config.diseases.contexts {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read contexts {}", path.display()))?;
        let v: Value = serde_json::from_str(&text)?;
        let diseases = v["diseases"]
            .as_object()
            .with_context(|| format!("{}: expected a \"diseases\" object", path.display()))?;
        return diseases
            .iter()
            .map(|(code, d)| {
                let ctx = d["contexts"]
                    .as_array()
                    .with_context(|| format!("{}: {code} has no contexts list", path.display()))?
                    .iter()
                    .map(|c| c.as_str().map(str::to_string).context("contexts must be strings"))
                    .collect::<anyhow::Result<Vec<_>>>()?;
                Ok((code.clone(), ctx))
            })
            .collect();
    }
    let store = load_corpus(layout)?;
    let annotations = load_mentions(layout)?;
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (pid, codes) in annotations.paragraph_codes(EntityKind::Disease) {
        if let Some(p) = store.paragraph(pid) {
            for code in codes {
                out.entry(code.to_string()).or_default().push(p.text.clone());
            }
        }
    }
    Ok(out)
}

pub fn diseases_train(config: &PipelineConfig, layout: &Layout) -> anyhow::Result<Summary> {
    let dc = &config.diseases;
    let mut contexts = disease_contexts(config, layout)?;
    if !dc.diseases.is_empty() {
        for code in &dc.diseases {
            if !contexts.contains_key(code) {
                bail!("no contexts for disease {code}");
            }
        }
        contexts.retain(|code, _| dc.diseases.contains(code));
    }
    contexts.retain(|_, ctx| ctx.len() >= dc.min_contexts.max(1));
    if contexts.len() < 2 {
        bail!("need at least 2 diseases with contexts, found {}", contexts.len());
    }
    let samples: BTreeMap<&str, Vec<String>> = contexts
        .iter()
        .map(|(code, ctx)| (code.as_str(), sample_paragraphs(ctx, dc.sample_size, dc.sample_seed)))
        .collect();
    let reference = match &dc.reference {
        Some(r) => r.clone(),
        None => dc.diseases.first().cloned().unwrap_or_else(|| {
            let mut by_size: Vec<(&str, usize)> = contexts.iter().map(|(c, v)| (c.as_str(), v.len())).collect();
            by_size.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            by_size[0].0.to_string()
        }),
    };
    let reference_sample = samples
        .get(reference.as_str())
        .with_context(|| format!("reference disease {reference} has no contexts"))?;
    let terms: TermList = extract_terms(reference_sample, dc.terms)?;

    let dir = layout.diseases();
    let models_dir = dir.join(d4c_service::layout::MODELS_DIR);
    fs::create_dir_all(&models_dir)?;
    terms.write_csv(&dir.join(d4c_service::layout::TERMS_FILE))?;
    let mut models = Vec::new();
    for (code, sample) in &samples {
        let sentences: Vec<Vec<String>> = sample.iter().map(|p| words(p)).collect();
        let model = train_disease_model(code, &sentences, &dc.embedding, None)?;
        write_word2vec(&model, &models_dir.join(format!("{code}.w2v")))?;
        models.push(model);
    }
    let mut distances: Vec<DiseaseDistance> = Vec::new();
    let mut skipped = Vec::new();
    for i in 0..models.len() {
        for j in i + 1..models.len() {
            for mode in [Aggregate::Euclidean, Aggregate::Wmd] {
                match compare_diseases(&models[i], &models[j], &terms, mode) {
                    Ok(d) => distances.push(d),
                    Err(d4c_core::diseasesim::DiseaseSimError::NoSharedTerms) => {
                        skipped.push(json!([models[i].disease, models[j].disease]));
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    fs::write(layout.distances(), serde_json::to_string_pretty(&distances)? + "\n")?;
    finish(
        "diseases-train",
        &dir,
        config,
        format!(
            "diseases-train: {} models, {} reference terms from {reference}, {} distances",
            models.len(),
            terms.len(),
            distances.len()
        ),
        json!({"models": models.len(), "reference": reference, "terms": terms.len(), "distances": distances.len(), "skipped_pairs": skipped}),
    )
}

pub fn kg_export(config: &PipelineConfig, layout: &Layout) -> anyhow::Result<Summary> {
    let store = load_corpus(layout)?;
    let annotations = load_mentions(layout)?;
    let (atc, mesh) = load_gazetteers(layout)?;
    let tables = export_annotations(&annotations, &store, &atc, &mesh)?;
    write_tables(&tables, &layout.tables())?;
    let rows: BTreeMap<&str, usize> = tables.iter().map(|(n, t)| (n.as_str(), t.rows.len())).collect();
    finish(
        "kg-export",
        &layout.tables(),
        config,
        format!(
            "kg-export: {} tables, {} rows",
            rows.len(),
            rows.values().sum::<usize>()
        ),
        json!(rows),
    )
}

pub fn kg_build(config: &PipelineConfig, layout: &Layout) -> anyhow::Result<Summary> {
    documents_file(layout)?;
    mentions_file(layout)?;
    for (name, _) in EXPORT_TABLES {
        require(layout.tables().join(name), "kg-export")?;
    }
    let mapping_text = match &config.kg.mapping {
        Some(p) => fs::read_to_string(p).with_context(|| format!("cannot read mapping {}", p.display()))?,
        None => DEFAULT_MAPPING.to_string(),
    };
    let mapping = parse_mapping(&mapping_text)?;
    validate_columns(&mapping, &export_schemas())?;
    let sources: BTreeSet<&str> = mapping
        .mappings
        .iter()
        .flat_map(|m| m.sources.iter().map(String::as_str))
        .collect();
    let tables = read_tables(&layout.tables(), sources)?;
    let triples = generate_triples(&tables, &mapping)?;
    fs::write(layout.kg_file(), serialize_ntriples(&triples))?;
    if config.kg.turtle {
        let mut prefixes = builtin_prefixes();
        prefixes.extend(mapping.prefixes.clone());
        fs::write(layout.kg().join("kg.ttl"), serialize_turtle(&triples, &prefixes))?;
    }
    finish(
        "kg-build",
        &layout.kg(),
        config,
        format!(
            "kg-build: {} triples from {} mappings",
            triples.len(),
            mapping.mappings.len()
        ),
        json!({"triples": triples.len(), "mappings": mapping.mappings.len(), "predicate_objects": mapping.predicate_object_count()}),
    )
}

pub fn query(layout: &Layout, query_file: &Path) -> anyhow::Result<QueryResult> {
    let text = fs::read_to_string(query_file).with_context(|| format!("cannot read query {}", query_file.display()))?;
    let query: PatternQuery =
        serde_json::from_str(&text).with_context(|| format!("invalid query {}", query_file.display()))?;
    let kg = require(layout.kg_file(), "kg-build")?;
    let graph = Graph::new(parse_ntriples(&fs::read_to_string(&kg)?)?);
    Ok(graph.query(&query)?)
}
