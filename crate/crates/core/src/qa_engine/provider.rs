//! Sentence-embedding providers for the dense backend.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Failure while obtaining embeddings. Transport faults mean the provider
/// could not be reached or did not answer in time; provider faults mean it
/// answered with an error or with an unusable body.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("embedding provider {provider} unreachable: {message}")]
    Transport { provider: String, message: String },
    #[error("embedding provider {provider} failed{}: {message}", status.map(|s| format!(" with HTTP {s}")).unwrap_or_default())]
    Provider {
        provider: String,
        status: Option<u16>,
        message: String,
    },
}

impl ProviderError {
    pub fn provider(&self) -> &str {
        match self {
            ProviderError::Transport { provider, .. } | ProviderError::Provider { provider, .. } => {
                provider
            }
        }
    }

    pub fn is_transport(&self) -> bool {
        matches!(self, ProviderError::Transport { .. })
    }
}

pub trait EmbeddingProvider: Send + Sync {
    /// Identifier used in error messages (URL, file name, ...).
    fn name(&self) -> &str;

    /// One raw vector per input text, in input order.
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
    pub dim: usize,
    #[serde(default)]
    pub model_tag: Option<String>,
}

/// Checks an embedding response against the request that produced it.
pub fn validate_response(
    provider: &str,
    texts: &[String],
    resp: &EmbedResponse,
) -> Result<(), ProviderError> {
    let fault = |message: String| ProviderError::Provider {
        provider: provider.to_string(),
        status: None,
        message,
    };
    if resp.vectors.len() != texts.len() {
        return Err(fault(format!(
            "returned {} vectors for {} texts",
            resp.vectors.len(),
            texts.len()
        )));
    }
    if let Some(v) = resp.vectors.iter().find(|v| v.len() != resp.dim) {
        return Err(fault(format!("vector of length {} but dim is {}", v.len(), resp.dim)));
    }
    if resp.vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(fault("non-finite vector component".into()));
    }
    Ok(())
}

/// Talks to an embedding sidecar over `POST <url>` with JSON bodies.
///
/// Each call is its own HTTP exchange, so a response can only ever belong
/// to the request that produced it.
pub struct HttpProvider {
    url: String,
    model_tag: Option<String>,
    agent: ureq::Agent,
}

impl HttpProvider {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            url: url.into(),
            model_tag: None,
            agent,
        }
    }

    pub fn with_model_tag(mut self, tag: impl Into<String>) -> Self {
        self.model_tag = Some(tag.into());
        self
    }
}

impl EmbeddingProvider for HttpProvider {
    fn name(&self) -> &str {
        &self.url
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let request = EmbedRequest {
            texts: texts.to_vec(),
            model_tag: self.model_tag.clone(),
        };
        let mut resp = self.agent.post(&self.url).send_json(&request).map_err(|e| match e {
            ureq::Error::StatusCode(status) => ProviderError::Provider {
                provider: self.url.clone(),
                status: Some(status),
                message: "error status".into(),
            },
            other => ProviderError::Transport {
                provider: self.url.clone(),
                message: other.to_string(),
            },
        })?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let message = resp
                .body_mut()
                .read_to_string()
                .unwrap_or_else(|_| String::from("<unreadable body>"));
            return Err(ProviderError::Provider {
                provider: self.url.clone(),
                status: Some(status),
                message,
            });
        }
        let body: EmbedResponse =
            resp.body_mut()
                .read_json()
                .map_err(|e| ProviderError::Provider {
                    provider: self.url.clone(),
                    status: Some(status),
                    message: format!("unreadable response body: {e}"),
                })?;
        validate_response(&self.url, texts, &body)?;
        Ok(body.vectors)
    }
}

/// Serves question embeddings computed offline, looked up by exact text.
#[derive(Debug, Clone, Default)]
pub struct PrecomputedProvider {
    name: String,
    by_text: HashMap<String, Vec<f64>>,
}

#[derive(Debug, Deserialize)]
struct PrecomputedRecord {
    text: String,
    vector: Vec<f64>,
}

impl PrecomputedProvider {
    pub fn new(name: impl Into<String>, by_text: HashMap<String, Vec<f64>>) -> Self {
        Self {
            name: name.into(),
            by_text,
        }
    }

    /// Reads JSON-lines `{"text": ..., "vector": [...]}` records; extra
    /// fields such as `qid` are ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let fault = |message: String| ProviderError::Provider {
            provider: name.clone(),
            status: None,
            message,
        };
        let file = std::fs::File::open(path).map_err(|e| ProviderError::Transport {
            provider: name.clone(),
            message: e.to_string(),
        })?;
        let mut by_text = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| fault(format!("line {}: {e}", i + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PrecomputedRecord = serde_json::from_str(&line)
                .map_err(|e| fault(format!("line {}: {e}", i + 1)))?;
            by_text.insert(rec.text, rec.vector);
        }
        Ok(Self::new(name, by_text))
    }

    pub fn insert(&mut self, text: impl Into<String>, vector: Vec<f64>) {
        self.by_text.insert(text.into(), vector);
    }
}

impl EmbeddingProvider for PrecomputedProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, ProviderError> {
        texts
            .iter()
            .map(|t| {
                self.by_text.get(t).cloned().ok_or_else(|| ProviderError::Provider {
                    provider: self.name.clone(),
                    status: None,
                    message: format!("no precomputed embedding for {t:?}"),
                })
            })
            .collect()
    }
}
