use serde::Deserialize;
use serde_json::json;

use super::http::{HttpConfig, JsonEndpoint};
use super::ProviderError;

pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        (**self).embed(text)
    }
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for Box<P> {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        (**self).embed(text)
    }
}

/// Cosine similarity; a zero vector is similar to nothing (0.0).
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, ProviderError> {
    if a.len() != b.len() {
        return Err(ProviderError::MalformedResponse(format!(
            "embedding dimensions differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (na * nb))
}

/// Client for `{"input": [...]}` → `{"data": [{"embedding": [...]}]}`
/// embedding endpoints.
pub struct RemoteEmbedder {
    endpoint: JsonEndpoint,
    model: Option<String>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    embedding: Vec<f64>,
}

impl RemoteEmbedder {
    pub fn new(config: HttpConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            endpoint: JsonEndpoint::new(config)?,
            model: None,
        })
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = Some(model.into());
        self
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        let mut body = json!({ "input": [text] });
        if let Some(model) = &self.model {
            body["model"] = json!(model);
        }
        let value = self.endpoint.post(&body)?;
        let parsed: EmbeddingResponse = serde_json::from_value(value)
            .map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        let item = parsed
            .data
            .into_iter()
            .next()
            .ok_or_else(|| ProviderError::MalformedResponse("empty embedding data".into()))?;
        if item.embedding.is_empty() {
            return Err(ProviderError::MalformedResponse("empty embedding vector".into()));
        }
        Ok(item.embedding)
    }
}
