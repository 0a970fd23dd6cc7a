use std::path::Path;

use serde::{Deserialize, Serialize};

use super::hash::{build_hash_index, hash_embed};
use super::index::{load_dense_index, VectorIndex};
use super::tfidf::{build_tfidf_index, TfidfModel};
use super::vector::{l2_normalize, QueryVector};
use super::{io_err, Backend, RetrievalError};
use crate::corpus::AnswerBank;
use crate::lang::Lang;

pub const ARTIFACT_VERSION: u32 = 1;
const MAGIC: &[u8; 6] = b"KWIDX\0";

/// How questions are projected into an index's space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Encoder {
    Tfidf(TfidfModel),
    Hash { dim: usize, seed: u64 },
    /// Questions are embedded by an external provider.
    Dense,
}

impl Encoder {
    /// Encodes text without any external service; `None` for [`Encoder::Dense`].
    pub fn encode_local(&self, text: &str) -> Option<Result<QueryVector, RetrievalError>> {
        match self {
            Encoder::Tfidf(model) => Some(Ok(QueryVector::Sparse(model.vectorize(text)))),
            Encoder::Hash { dim, seed } => Some(hash_embed(text, *dim, *seed).map(QueryVector::Dense)),
            Encoder::Dense => None,
        }
    }

    /// Wraps a provider-supplied embedding as a normalised query.
    pub fn from_embedding(mut v: Vec<f64>) -> Result<QueryVector, RetrievalError> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(RetrievalError::NonFinite {
                id: "<query>".into(),
            });
        }
        l2_normalize(&mut v);
        Ok(QueryVector::Dense(v))
    }
}

/// A searchable index together with the query encoder that matches it.
/// This is what the index cache file stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexArtifact {
    pub version: u32,
    pub index: VectorIndex,
    pub encoder: Encoder,
}

impl IndexArtifact {
    pub fn new(index: VectorIndex, encoder: Encoder) -> Self {
        Self {
            version: ARTIFACT_VERSION,
            index,
            encoder,
        }
    }

    pub fn lang(&self) -> Lang {
        self.index.lang
    }

    pub fn backend(&self) -> Backend {
        self.index.backend
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        out.extend(
            bincode::serde::encode_to_vec(self, bincode::config::standard())
                .expect("index artifact serializes"),
        );
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, RetrievalError> {
        let body = bytes
            .strip_prefix(MAGIC.as_slice())
            .ok_or_else(|| RetrievalError::Cache("not an index cache file".into()))?;
        let (artifact, _): (IndexArtifact, usize) =
            bincode::serde::decode_from_slice(body, bincode::config::standard())
                .map_err(|e| RetrievalError::Cache(e.to_string()))?;
        if artifact.version != ARTIFACT_VERSION {
            return Err(RetrievalError::Cache(format!(
                "unsupported cache version {}",
                artifact.version
            )));
        }
        Ok(artifact)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RetrievalError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(io_err(path))
    }

    /// Loads a cached index. With `bank`, the cache is rejected as stale if
    /// it was built from a different bank.
    pub fn load(path: impl AsRef<Path>, bank: Option<&AnswerBank>) -> Result<Self, RetrievalError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        let artifact = Self::from_bytes(&bytes)?;
        if let Some(bank) = bank {
            let current = bank.digest();
            if artifact.index.meta.bank_digest != current {
                return Err(RetrievalError::StaleCache {
                    cached: artifact.index.meta.bank_digest.clone(),
                    current,
                });
            }
        }
        Ok(artifact)
    }
}

/// Parameters for [`build_index`]; only the ones relevant to the backend
/// are read.
#[derive(Debug, Clone)]
pub struct BuildOptions<'a> {
    pub dim: usize,
    pub seed: u64,
    pub vectors: Option<&'a Path>,
}

impl Default for BuildOptions<'_> {
    fn default() -> Self {
        Self {
            dim: 1024,
            seed: 0,
            vectors: None,
        }
    }
}

pub fn build_index(
    bank: &AnswerBank,
    lang: Lang,
    backend: Backend,
    opts: &BuildOptions<'_>,
) -> Result<IndexArtifact, RetrievalError> {
    match backend {
        Backend::Tfidf => {
            let (model, index) = build_tfidf_index(bank, lang)?;
            Ok(IndexArtifact::new(index, Encoder::Tfidf(model)))
        }
        Backend::Hash => {
            let index = build_hash_index(bank, lang, opts.dim, opts.seed)?;
            Ok(IndexArtifact::new(
                index,
                Encoder::Hash {
                    dim: opts.dim,
                    seed: opts.seed,
                },
            ))
        }
        Backend::Dense => {
            let path = opts
                .vectors
                .ok_or_else(|| RetrievalError::Cache("dense backend needs a vector file".into()))?;
            Ok(IndexArtifact::new(load_dense_index(path, bank, lang)?, Encoder::Dense))
        }
    }
}
