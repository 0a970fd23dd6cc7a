//! Per-language vector indexes over the answer bank and exact cosine top-k
//! search.
//!
//! Three backends share one [`VectorIndex`] type: sparse TF-IDF over word
//! unigrams and bigrams, dense vectors loaded from an embedding file, and a
//! deterministic feature-hashing embedder that needs no model at all. Every
//! stored row is L2-normalised, so cosine similarity is a plain dot product.

mod artifact;
mod hash;
mod index;
mod tfidf;
mod tokenize;
mod vector;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use artifact::{build_index, BuildOptions, Encoder, IndexArtifact, ARTIFACT_VERSION};
pub use hash::{build_hash_index, hash_embed, MIN_HASH_DIM};
pub use index::{
    cosine_top_k, dense_index_from_records, load_dense_index, parse_dense_records, DenseRecord, IndexEntry, IndexMeta,
    Rows, ScoredAnswer, TopK, VectorIndex,
};
pub use tfidf::{build_tfidf_index, tfidf_vectorize, TfidfModel};
pub use tokenize::{ngrams, tokenize};
pub use vector::{l2_normalize, QueryVector, SparseVector};

use crate::lang::Lang;

/// Vectorisation strategy for questions and answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Tfidf,
    Dense,
    Hash,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Tfidf, Backend::Dense, Backend::Hash];

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Tfidf => "tfidf",
            Backend::Dense => "dense",
            Backend::Hash => "hash",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = RetrievalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tfidf" => Ok(Backend::Tfidf),
            "dense" => Ok(Backend::Dense),
            "hash" => Ok(Backend::Hash),
            other => Err(RetrievalError::UnknownBackend(other.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("no paragraphs in language {0} to index")]
    EmptyLang(Lang),
    #[error("unknown backend {0:?} (expected tfidf, dense or hash)")]
    UnknownBackend(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed vector record: {message}")]
    Malformed { line: usize, message: String },
    #[error("vector for {id:?} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("vector file has no record for paragraph {0:?}")]
    MissingId(String),
    #[error("vector file references unknown paragraph {0:?}")]
    UnknownId(String),
    #[error("vector file has more than one record for {0:?}")]
    DuplicateId(String),
    #[error("vector for {id:?} has a non-finite component")]
    NonFinite { id: String },
    #[error("vector file is empty")]
    NoVectors,
    #[error("query has dimension {found}, index expects {expected}")]
    QueryDimension { expected: usize, found: usize },
    #[error("{query} query cannot be scored against a {index} index")]
    KindMismatch {
        query: &'static str,
        index: &'static str,
    },
    #[error("k must be at least 1")]
    InvalidK,
    #[error("hash embedding dimension must be >= {min}, got {dim}", min = MIN_HASH_DIM)]
    InvalidDim { dim: usize },
    #[error("index cache: {0}")]
    Cache(String),
    #[error("index cache is stale: built for bank {cached}, current bank is {current}")]
    StaleCache { cached: String, current: String },
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> RetrievalError {
    let path = path.into();
    move |source| RetrievalError::Io { path, source }
}
