//! TOML service configuration and engine assembly.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::corpus::AnswerBank;
use crate::lang::Lang;
use crate::qa_engine::{Engine, EngineError, HttpProvider};
use crate::retrieval::{build_index, Backend, BuildOptions, IndexArtifact};

pub const CONFIG_ENV: &str = "KWAME_CONFIG";
pub const PORT_ENV: &str = "KWAME_PORT";
pub const DEFAULT_SERVICE_THRESHOLD: f64 = 0.35;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub bank: PathBuf,
    #[serde(default = "default_backend")]
    pub default_backend: Backend,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    /// Minimum top score to answer; omit to always answer.
    #[serde(default = "default_threshold")]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub service: ServiceSection,
    #[serde(default)]
    pub provider: Option<ProviderSection>,
    #[serde(default)]
    pub hash: HashSection,
    #[serde(default, rename = "index")]
    pub indexes: Vec<IndexSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceSection {
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    #[serde(default)]
    pub log_path: Option<PathBuf>,
    /// Interactions kept in memory for feedback lookups.
    #[serde(default = "default_window")]
    pub feedback_window: usize,
}

impl Default for ServiceSection {
    fn default() -> Self {
        Self {
            bind: default_bind(),
            log_path: None,
            feedback_window: default_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderSection {
    pub url: String,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub model_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HashSection {
    pub dim: usize,
    pub seed: u64,
}

impl Default for HashSection {
    fn default() -> Self {
        let o = BuildOptions::default();
        Self { dim: o.dim, seed: o.seed }
    }
}

/// One index to load at startup. Without `path`, tfidf and hash indexes
/// are built from the bank. A dense `path` ending in `.jsonl` is read as a
/// vector file; any other path is an index cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexSection {
    pub lang: Lang,
    pub backend: Backend,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

fn default_backend() -> Backend {
    Backend::Tfidf
}
fn default_top_k() -> usize {
    crate::qa_engine::DEFAULT_TOP_K
}
fn default_threshold() -> Option<f64> {
    Some(DEFAULT_SERVICE_THRESHOLD)
}
fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}
fn default_window() -> usize {
    10_000
}
fn default_timeout() -> u64 {
    5_000
}

impl ServiceConfig {
    /// Minimal config serving every language of `bank` with one backend.
    pub fn for_bank(bank: impl Into<PathBuf>, langs: &[Lang], backend: Backend) -> Self {
        Self {
            bank: bank.into(),
            default_backend: backend,
            top_k: default_top_k(),
            threshold: default_threshold(),
            service: ServiceSection::default(),
            provider: None,
            hash: HashSection::default(),
            indexes: langs
                .iter()
                .map(|&lang| IndexSection { lang, backend, path: None })
                .collect(),
        }
    }

    /// Parses TOML. Relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, EngineError> {
        let mut cfg: ServiceConfig =
            toml::from_str(text).map_err(|e| EngineError::Config(e.to_string()))?;
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        rebase(&mut cfg.bank);
        if let Some(p) = cfg.service.log_path.as_mut() {
            rebase(p);
        }
        for ix in &mut cfg.indexes {
            if let Some(p) = ix.path.as_mut() {
                rebase(p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EngineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Loads `path`, or the file named by `KWAME_CONFIG` when `path` is
    /// absent, then applies `KWAME_PORT`.
    pub fn load_with_env(path: Option<&Path>) -> Result<Self, EngineError> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let path = path
            .map(Path::to_path_buf)
            .or(from_env)
            .ok_or_else(|| EngineError::Config(format!("no config file given and {CONFIG_ENV} is unset")))?;
        let mut cfg = Self::load(path)?;
        cfg.apply_port_env(std::env::var(PORT_ENV).ok().as_deref())?;
        Ok(cfg)
    }

    pub fn apply_port_env(&mut self, port: Option<&str>) -> Result<(), EngineError> {
        if let Some(port) = port {
            let port: u16 = port
                .trim()
                .parse()
                .map_err(|_| EngineError::Config(format!("{PORT_ENV}={port:?} is not a port")))?;
            self.service.bind.set_port(port);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if self.indexes.is_empty() {
            return bad("at least one [[index]] must be configured".into());
        }
        if self.top_k == 0 {
            return bad("top_k must be at least 1".into());
        }
        if self.threshold.is_some_and(|t| !t.is_finite()) {
            return bad("threshold must be finite".into());
        }
        if let Some(p) = &self.provider {
            if p.timeout_ms == 0 {
                return bad("provider.timeout_ms must be greater than 0".into());
            }
        }
        for (i, a) in self.indexes.iter().enumerate() {
            if self.indexes[..i].iter().any(|b| b.lang == a.lang && b.backend == a.backend) {
                return bad(format!("{} index for {} is configured twice", a.backend, a.lang));
            }
            if a.backend == Backend::Dense {
                if a.path.is_none() {
                    return bad(format!("dense index for {} needs a path", a.lang));
                }
                if self.provider.is_none() {
                    return bad("dense indexes need a [provider] to embed questions".into());
                }
            }
        }
        if !self.indexes.iter().any(|ix| ix.backend == self.default_backend) {
            return bad(format!("no index uses the default backend {}", self.default_backend));
        }
        Ok(())
    }

    pub fn languages(&self) -> Vec<Lang> {
        let mut langs: Vec<Lang> = self.indexes.iter().map(|i| i.lang).collect();
        langs.sort();
        langs.dedup();
        langs
    }

    /// Loads the bank and every configured index. Any failure aborts.
    pub fn build_engine(&self) -> Result<Engine, EngineError> {
        self.validate()?;
        let bank = AnswerBank::load(&self.bank)?;
        let mut indexes = Vec::with_capacity(self.indexes.len());
        for ix in &self.indexes {
            let opts = BuildOptions {
                dim: self.hash.dim,
                seed: self.hash.seed,
                vectors: ix.path.as_deref(),
            };
            let is_vectors = ix
                .path
                .as_deref()
                .is_some_and(|p| p.extension().is_some_and(|e| e == "jsonl"));
            let artifact = match (&ix.path, ix.backend) {
                (None, _) => build_index(&bank, ix.lang, ix.backend, &opts)?,
                (Some(_), Backend::Dense) if is_vectors => build_index(&bank, ix.lang, ix.backend, &opts)?,
                (Some(path), _) => {
                    let a = IndexArtifact::load(path, Some(&bank))?;
                    if a.lang() != ix.lang || a.backend() != ix.backend {
                        return Err(EngineError::Config(format!(
                            "{} holds a {} {} index, expected {} {}",
                            path.display(),
                            a.lang(),
                            a.backend(),
                            ix.lang,
                            ix.backend
                        )));
                    }
                    a
                }
            };
            indexes.push(artifact);
        }

        let mut builder = Engine::builder(bank)
            .default_backend(self.default_backend)
            .default_top_k(self.top_k)
            .default_threshold(self.threshold);
        for a in indexes {
            builder = builder.index(a)?;
        }
        if let Some(p) = &self.provider {
            let mut http = HttpProvider::new(&p.url, Duration::from_millis(p.timeout_ms));
            if let Some(tag) = &p.model_tag {
                http = http.with_model_tag(tag);
            }
            builder = builder.provider(Arc::new(http));
        }
        Ok(builder.build())
    }
}
