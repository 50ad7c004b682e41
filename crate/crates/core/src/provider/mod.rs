//! Sources of teacher-forced token logprobs.
//!
//! [`ScoringProvider`] is the one contract the scorer depends on. Two
//! implementations ship: [`ReferenceLm`], a deterministic word-bigram model
//! used offline, and [`RemoteScorer`], a client for completion endpoints
//! that echo per-token logprobs.

mod embedding;
mod http;
mod prompt;
mod reference;
mod remote;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::TokenScore;

pub use embedding::{cosine_similarity, EmbeddingProvider, RemoteEmbedder};
pub use http::{HttpConfig, DEFAULT_MAX_IN_FLIGHT, DEFAULT_TIMEOUT_MS};
pub use prompt::{render_prompt, PROMPT_TEMPLATE};
pub use reference::{train_reference_lm, ReferenceLm, DEFAULT_PROMPT_WEIGHT};
pub use remote::{LogBase, RemoteScorer};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("scoring backend unavailable: {message}")]
    Unavailable {
        message: String,
        status: Option<u16>,
        retryable: bool,
    },
    #[error("backend tokens do not reproduce the scored text: {0}")]
    TokenizationMismatch(String),
    #[error("malformed backend response: {0}")]
    MalformedResponse(String),
    #[error("question must not be empty")]
    InvalidQuestion,
    #[error("invalid scoring request: {0}")]
    InvalidRequest(String),
    #[error("reference corpus is empty")]
    EmptyCorpus,
    #[error("smoothing alpha must be positive and finite, got {0}")]
    InvalidSmoothing(f64),
}

impl ProviderError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, ProviderError::Unavailable { retryable: true, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScoringRequest {
    /// Fully rendered prompt, context condition included.
    pub prompt: String,
    /// Text to teacher-force score.
    pub answer: String,
}

impl ScoringRequest {
    pub fn new(prompt: impl Into<String>, answer: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            answer: answer.into(),
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.answer.is_empty() {
            return Err(ProviderError::InvalidRequest("answer is empty".into()));
        }
        Ok(())
    }
}

/// Returns natural-log probabilities for every token of `request.answer`,
/// each conditioned on the prompt and the preceding answer tokens. Token
/// texts concatenate to the answer exactly.
pub trait ScoringProvider: Send + Sync {
    fn score_answer(&self, request: &ScoringRequest) -> Result<Vec<TokenScore>, ProviderError>;

    /// How many requests this provider is willing to serve at once.
    fn max_in_flight(&self) -> usize {
        DEFAULT_MAX_IN_FLIGHT
    }
}

impl<P: ScoringProvider + ?Sized> ScoringProvider for &P {
    fn score_answer(&self, request: &ScoringRequest) -> Result<Vec<TokenScore>, ProviderError> {
        (**self).score_answer(request)
    }

    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}

impl<P: ScoringProvider + ?Sized> ScoringProvider for Arc<P> {
    fn score_answer(&self, request: &ScoringRequest) -> Result<Vec<TokenScore>, ProviderError> {
        (**self).score_answer(request)
    }

    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}

impl<P: ScoringProvider + ?Sized> ScoringProvider for Box<P> {
    fn score_answer(&self, request: &ScoringRequest) -> Result<Vec<TokenScore>, ProviderError> {
        (**self).score_answer(request)
    }

    fn max_in_flight(&self) -> usize {
        (**self).max_in_flight()
    }
}

/// In-memory memoization of successful responses keyed by request.
pub struct Memoized<P> {
    inner: P,
    cache: Mutex<HashMap<ScoringRequest, Vec<TokenScore>>>,
}

impl<P: ScoringProvider> Memoized<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached_requests(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: ScoringProvider> ScoringProvider for Memoized<P> {
    fn score_answer(&self, request: &ScoringRequest) -> Result<Vec<TokenScore>, ProviderError> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(request) {
            return Ok(hit.clone());
        }
        let tokens = self.inner.score_answer(request)?;
        self.cache
            .lock()
            .expect("cache lock")
            .insert(request.clone(), tokens.clone());
        Ok(tokens)
    }

    fn max_in_flight(&self) -> usize {
        self.inner.max_in_flight()
    }
}
