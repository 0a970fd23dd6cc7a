//! The question path: detect the language, pick that language's index,
//! vectorise the question with the matching backend, apply lesson filters
//! and the confidence threshold, and return ranked paragraphs.

mod detect;
mod engine;
mod provider;
mod tags;

pub use detect::{
    bundled_detector, detect_language, Detection, LanguageDetector, LanguageProfile,
    MIN_DETECT_CHARS, STOPWORD_BONUS,
};
pub use engine::{
    Answer, Answerer, AskRequest, AskResponse, Engine, EngineBuilder, EngineHandle,
    DEFAULT_TOP_K, NO_CANDIDATES, NO_CONFIDENT_ANSWER, NO_SIGNAL,
};
pub use provider::{
    validate_response, EmbedRequest, EmbedResponse, EmbeddingProvider, HttpProvider,
    PrecomputedProvider, ProviderError,
};
pub use tags::parse_tags;

use crate::corpus::CorpusError;
use crate::lang::Lang;
use crate::retrieval::{Backend, RetrievalError};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("no {backend} index loaded for language {lang}")]
    NoIndex { lang: Lang, backend: Backend },
    #[error("dense backend requires an embedding provider, none configured")]
    NoProvider,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("configuration: {0}")]
    Config(String),
}
