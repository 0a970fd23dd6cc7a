use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use super::detect::{bundled_detector, LanguageDetector};
use super::provider::{EmbeddingProvider, ProviderError};
use super::tags::parse_tags;
use super::EngineError;
use crate::corpus::AnswerBank;
use crate::lang::Lang;
use crate::retrieval::{
    build_index, cosine_top_k, Backend, BuildOptions, Encoder, IndexArtifact, IndexEntry,
};

pub const DEFAULT_TOP_K: usize = 3;

pub const NO_CONFIDENT_ANSWER: &str = "no confident answer";
pub const NO_SIGNAL: &str = "no signal: the question shares nothing with the answer bank";
pub const NO_CANDIDATES: &str = "no candidate answers match the requested lesson";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskRequest {
    pub question: String,
    /// Falls back to the engine default (3) when absent.
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub lang_override: Option<Lang>,
    /// Explicit lesson filter; takes precedence over a `#lessonN` tag.
    #[serde(default)]
    pub lesson: Option<u32>,
    /// Minimum top score to answer. Falls back to the engine default;
    /// `-inf` disables the check for this request.
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub backend: Option<Backend>,
    /// Leave `#lessonN` text in the question and apply no tag filter.
    #[serde(default)]
    pub ignore_tags: bool,
}

impl AskRequest {
    pub fn new(question: impl Into<String>) -> Self {
        Self {
            question: question.into(),
            top_k: None,
            lang_override: None,
            lesson: None,
            threshold: None,
            backend: None,
            ignore_tags: false,
        }
    }

    pub fn top_k(mut self, k: usize) -> Self {
        self.top_k = Some(k);
        self
    }

    pub fn lang(mut self, lang: Lang) -> Self {
        self.lang_override = Some(lang);
        self
    }

    pub fn lesson(mut self, lesson: u32) -> Self {
        self.lesson = Some(lesson);
        self
    }

    pub fn threshold(mut self, t: f64) -> Self {
        self.threshold = Some(t);
        self
    }

    pub fn backend(mut self, b: Backend) -> Self {
        self.backend = Some(b);
        self
    }

    pub fn ignore_tags(mut self) -> Self {
        self.ignore_tags = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub id: String,
    pub text: String,
    pub figure_refs: Vec<String>,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskResponse {
    pub lang_detected: Lang,
    pub answered: bool,
    pub answers: Vec<Answer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl AskResponse {
    pub fn top_score(&self) -> Option<f64> {
        self.answers.first().map(|a| a.score)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.answers.iter().map(|a| a.id.as_str()).collect()
    }
}

/// Anything that answers questions against an answer bank. The evaluation
/// harness is written against this trait so it can drive stubs as well as
/// the real [`Engine`].
pub trait Answerer {
    fn ask(&self, req: &AskRequest) -> Result<AskResponse, EngineError>;
    fn bank(&self) -> &AnswerBank;
}

/// Loaded banks, indexes and encoders. Immutable once built.
pub struct Engine {
    bank: AnswerBank,
    indexes: BTreeMap<(Lang, Backend), IndexArtifact>,
    provider: Option<Arc<dyn EmbeddingProvider>>,
    detector: &'static LanguageDetector,
    default_backend: Backend,
    default_top_k: usize,
    default_threshold: Option<f64>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("paragraphs", &self.bank.len())
            .field("indexes", &self.indexes.keys().collect::<Vec<_>>())
            .field("provider", &self.provider.as_ref().map(|p| p.name().to_string()))
            .field("default_backend", &self.default_backend)
            .finish()
    }
}

impl Engine {
    pub fn builder(bank: AnswerBank) -> EngineBuilder {
        EngineBuilder {
            bank,
            indexes: BTreeMap::new(),
            provider: None,
            default_backend: Backend::Tfidf,
            default_top_k: DEFAULT_TOP_K,
            default_threshold: None,
        }
    }

    pub fn languages(&self) -> Vec<Lang> {
        let mut langs: Vec<Lang> = self.indexes.keys().map(|(l, _)| *l).collect();
        langs.dedup();
        langs
    }

    pub fn backends(&self) -> Vec<Backend> {
        let mut b: Vec<Backend> = self.indexes.keys().map(|(_, b)| *b).collect();
        b.sort();
        b.dedup();
        b
    }

    pub fn index(&self, lang: Lang, backend: Backend) -> Option<&IndexArtifact> {
        self.indexes.get(&(lang, backend))
    }

    pub fn default_backend(&self) -> Backend {
        self.default_backend
    }

    pub fn provider_name(&self) -> Option<&str> {
        self.provider.as_deref().map(|p| p.name())
    }

    fn encode(
        &self,
        artifact: &IndexArtifact,
        text: &str,
    ) -> Result<crate::retrieval::QueryVector, EngineError> {
        if let Some(q) = artifact.encoder.encode_local(text) {
            return Ok(q?);
        }
        let provider = self.provider.as_ref().ok_or(EngineError::NoProvider)?;
        let mut vectors = provider.embed(&[text.to_string()])?;
        let v = vectors.pop().filter(|_| vectors.is_empty()).ok_or_else(|| {
            ProviderError::Provider {
                provider: provider.name().to_string(),
                status: None,
                message: "expected exactly one vector".into(),
            }
        })?;
        Ok(Encoder::from_embedding(v)?)
    }

    pub fn ask(&self, req: &AskRequest) -> Result<AskResponse, EngineError> {
        let top_k = req.top_k.unwrap_or(self.default_top_k);
        if top_k == 0 {
            return Err(EngineError::InvalidRequest("top_k must be at least 1".into()));
        }
        let threshold = req.threshold.or(self.default_threshold);
        if threshold.is_some_and(f64::is_nan) {
            return Err(EngineError::InvalidRequest("threshold must be a number".into()));
        }

        let (question, tag) = if req.ignore_tags {
            (req.question.clone(), None)
        } else {
            parse_tags(&req.question)
        };
        let lesson = req.lesson.or(tag);
        let lang = req
            .lang_override
            .unwrap_or_else(|| self.detector.detect(&question).lang);
        let backend = req.backend.unwrap_or(self.default_backend);
        let artifact = self
            .indexes
            .get(&(lang, backend))
            .ok_or(EngineError::NoIndex { lang, backend })?;

        let query = self.encode(artifact, &question)?;
        let lesson_filter = lesson.map(|l| move |e: &IndexEntry| e.lesson == l);
        let filter = lesson_filter.as_ref().map(|f| f as &dyn Fn(&IndexEntry) -> bool);
        let top = cosine_top_k(&query, &artifact.index, top_k, filter)?;

        let declined = |message: &str| AskResponse {
            lang_detected: lang,
            answered: false,
            answers: Vec::new(),
            message: Some(message.to_string()),
        };
        if top.no_signal {
            return Ok(declined(NO_SIGNAL));
        }
        let Some(best) = top.answers.first() else {
            return Ok(declined(NO_CANDIDATES));
        };
        if threshold.is_some_and(|t| best.score < t) {
            return Ok(declined(NO_CONFIDENT_ANSWER));
        }

        let answers = top
            .answers
            .into_iter()
            .map(|s| {
                let p = self.bank.get(&s.id).expect("index ids are validated against the bank");
                Answer {
                    text: p.text.clone(),
                    figure_refs: p.figure_refs.clone(),
                    id: s.id,
                    score: s.score,
                    rank: s.rank,
                }
            })
            .collect();
        Ok(AskResponse {
            lang_detected: lang,
            answered: true,
            answers,
            message: None,
        })
    }
}

impl Answerer for Engine {
    fn ask(&self, req: &AskRequest) -> Result<AskResponse, EngineError> {
        Engine::ask(self, req)
    }

    fn bank(&self) -> &AnswerBank {
        &self.bank
    }
}

pub struct EngineBuilder {
    bank: AnswerBank,
    indexes: BTreeMap<(Lang, Backend), IndexArtifact>,
    provider: Option<Arc<dyn EmbeddingProvider>>,
    default_backend: Backend,
    default_top_k: usize,
    default_threshold: Option<f64>,
}

impl EngineBuilder {
    /// Adds a prebuilt or cached index. Its ids must be exactly the bank's
    /// paragraphs in the index language.
    pub fn index(mut self, artifact: IndexArtifact) -> Result<Self, EngineError> {
        let lang = artifact.lang();
        let expected: Vec<&str> = self.bank.in_lang(lang).map(|p| p.id.as_str()).collect();
        let got: Vec<&str> = artifact.index.ids().collect();
        if expected != got {
            return Err(EngineError::Config(format!(
                "{} index for {lang} does not match the answer bank ({} rows, bank has {})",
                artifact.backend(),
                got.len(),
                expected.len()
            )));
        }
        self.indexes.insert((lang, artifact.backend()), artifact);
        Ok(self)
    }

    /// Builds an index from the bank for every language it contains.
    pub fn build_all(mut self, backend: Backend, opts: &BuildOptions<'_>) -> Result<Self, EngineError> {
        for lang in self.bank.languages() {
            let artifact = build_index(&self.bank, lang, backend, opts)?;
            self = self.index(artifact)?;
        }
        Ok(self)
    }

    pub fn provider(mut self, provider: Arc<dyn EmbeddingProvider>) -> Self {
        self.provider = Some(provider);
        self
    }

    pub fn default_backend(mut self, backend: Backend) -> Self {
        self.default_backend = backend;
        self
    }

    pub fn default_top_k(mut self, k: usize) -> Self {
        self.default_top_k = k.max(1);
        self
    }

    pub fn default_threshold(mut self, t: Option<f64>) -> Self {
        self.default_threshold = t;
        self
    }

    pub fn build(self) -> Engine {
        Engine {
            bank: self.bank,
            indexes: self.indexes,
            provider: self.provider,
            detector: bundled_detector(),
            default_backend: self.default_backend,
            default_top_k: self.default_top_k,
            default_threshold: self.default_threshold,
        }
    }
}

/// Shared pointer to the live engine. Readers take a snapshot; `publish`
/// swaps in a rebuilt engine, so a request sees either the old state or the
/// new one, never a mix.
#[derive(Clone)]
pub struct EngineHandle {
    inner: Arc<RwLock<Arc<Engine>>>,
}

impl EngineHandle {
    pub fn new(engine: Engine) -> Self {
        Self {
            inner: Arc::new(RwLock::new(Arc::new(engine))),
        }
    }

    pub fn current(&self) -> Arc<Engine> {
        self.inner.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn publish(&self, engine: Engine) {
        *self.inner.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(engine);
    }
}
