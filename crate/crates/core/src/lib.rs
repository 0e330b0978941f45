//! Core pipeline for drug-oriented exploration of biomedical literature.
//!
//! The crate turns a corpus of CORD-19 shaped articles into:
//!
//! - gazetteer annotations of drugs (ATC codes) and diseases (MeSH descriptors),
//! - a substance-aligned topic model with hierarchical hashing of topic
//!   distributions for document similarity,
//! - TF-IDF drug vectors, a single-linkage dendrogram, silhouette-based
//!   cluster selection and a random-hyperplane forest for replacement queries,
//! - per-disease word embeddings compared by per-term distance or Word
//!   Mover's Distance,
//! - an RDF knowledge graph compiled from CSV exports through a declarative
//!   mapping document, with canonical N-Triples output and a basic graph
//!   pattern query evaluator.

pub mod annotate;
pub mod corpus;
pub mod diseasesim;
pub mod drugsim;
pub mod kgmap;
pub mod topics;

pub(crate) mod rng;
pub mod text;
