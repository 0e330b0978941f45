//! Drug similarity from co-mentioned diseases.
//!
//! Drugs are described by the diseases they share paragraphs with, weighted
//! by TF-IDF, clustered by single linkage under cosine distance, and indexed
//! in a forest of random-hyperplane trees for replacement queries.

mod ann;
mod cluster;
mod matrix;
mod replace;

pub use ann::{AnnConfig, AnnIndex};
pub use cluster::{
    agglomerate, cosine_distance_matrix, cosine_similarity, select_clusters, silhouette_score,
    silhouette_with_distances, ClusterSelection, Dendrogram, Merge,
};
pub use matrix::{build_matrix, tfidf_transform, CooccurrenceMatrix, CountMode, DrugVector};
pub use replace::{query_replacements, Replacement};

#[derive(Debug, thiserror::Error)]
pub enum DrugSimError {
    #[error("no paragraph mentions both a drug and a disease")]
    NoCooccurrences,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("need at least 2 items to cluster, got {0}")]
    TooFewItems(usize),
    #[error("silhouette needs at least 2 non-empty clusters")]
    SingleCluster,
    #[error("assignment has {got} entries for {expected} vectors")]
    AssignmentLength { expected: usize, got: usize },
    #[error("invalid cluster range [{k_min}, {k_max}] for {n} items")]
    InvalidRange { k_min: usize, k_max: usize, n: usize },
    #[error("unknown drug {0:?}")]
    UnknownDrug(String),
    #[error("malformed artifact: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DrugSimError>;
