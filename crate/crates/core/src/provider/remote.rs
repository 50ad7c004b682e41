//! Client for completion endpoints that echo the prompt with per-token
//! logprobs (`echo: true, logprobs: 1`).
//!
//! The scored text is sent as raw completion input: the prompt, a separator
//! (one space by default), then the answer. The response's `tokens` are
//! walked in order and must reproduce that text byte for byte; the tokens
//! covering the answer are returned with spans relative to the answer. A
//! token straddling the separator keeps its logprob and is clipped to its
//! in-answer part.

use serde::Deserialize;
use serde_json::{json, Value};

use super::http::{HttpConfig, JsonEndpoint};
use super::{ProviderError, ScoringProvider, ScoringRequest};
use crate::metric::{Span, TokenScore};

/// Base of the logarithms a backend reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    E,
    Two,
    Ten,
}

impl LogBase {
    pub fn to_natural(self, logprob: f64) -> f64 {
        match self {
            LogBase::E => logprob,
            LogBase::Two => logprob * std::f64::consts::LN_2,
            LogBase::Ten => logprob * std::f64::consts::LN_10,
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "e" | "ln" | "natural" => Ok(LogBase::E),
            "2" => Ok(LogBase::Two),
            "10" => Ok(LogBase::Ten),
            other => Err(format!("unknown log base {other:?} (expected e, 2 or 10)")),
        }
    }
}

pub struct RemoteScorer {
    endpoint: JsonEndpoint,
    model: Option<String>,
    separator: String,
    max_tokens: u32,
    log_base: LogBase,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    logprobs: Option<Logprobs>,
}

#[derive(Deserialize)]
struct Logprobs {
    tokens: Option<Vec<String>>,
    token_logprobs: Option<Vec<Option<f64>>>,
    text_offset: Option<Vec<i64>>,
}

impl RemoteScorer {
    pub fn new(config: HttpConfig) -> Result<Self, ProviderError> {
        Ok(Self {
            endpoint: JsonEndpoint::new(config)?,
            model: None,
            separator: " ".to_string(),
            max_tokens: 1,
            log_base: LogBase::E,
        })
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = Some(model.into());
        self
    }

    pub fn with_separator(mut self, separator: impl Into<String>) -> Self {
        self.separator = separator.into();
        self
    }

    pub fn with_log_base(mut self, base: LogBase) -> Self {
        self.log_base = base;
        self
    }

    /// Tokens the backend is asked to generate after the echo; they are
    /// discarded.
    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    fn scored_text(&self, request: &ScoringRequest) -> (String, usize) {
        let mut text = request.prompt.clone();
        if !request.prompt.is_empty() {
            text.push_str(&self.separator);
        }
        let answer_start = text.len();
        text.push_str(&request.answer);
        (text, answer_start)
    }

    pub(crate) fn request_body(&self, text: &str) -> Value {
        let mut body = json!({
            "prompt": text,
            "echo": true,
            "logprobs": 1,
            "max_tokens": self.max_tokens,
            "temperature": 0,
        });
        if let Some(model) = &self.model {
            body["model"] = json!(model);
        }
        body
    }

    /// Turns an echoed-logprobs response into answer tokens.
    pub fn parse_response(
        &self,
        response: Value,
        request: &ScoringRequest,
    ) -> Result<Vec<TokenScore>, ProviderError> {
        let (text, answer_start) = self.scored_text(request);
        let parsed: CompletionResponse = serde_json::from_value(response)
            .map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
        let logprobs = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.logprobs)
            .ok_or_else(|| ProviderError::MalformedResponse("no logprobs in first choice".into()))?;
        let (Some(tokens), Some(values), Some(offsets)) =
            (logprobs.tokens, logprobs.token_logprobs, logprobs.text_offset)
        else {
            return Err(ProviderError::MalformedResponse(
                "logprobs must carry tokens, token_logprobs and text_offset".into(),
            ));
        };
        if tokens.len() != values.len() || tokens.len() != offsets.len() {
            return Err(ProviderError::MalformedResponse(format!(
                "parallel arrays differ in length: {} tokens, {} logprobs, {} offsets",
                tokens.len(),
                values.len(),
                offsets.len()
            )));
        }

        let answer = request.answer.as_str();
        let mut out = Vec::new();
        let mut pos = 0;
        for (i, (tok, lp)) in tokens.iter().zip(&values).enumerate() {
            if pos >= text.len() {
                // generated continuation
                break;
            }
            let end = pos + tok.len();
            if end > text.len() || !text.is_char_boundary(end) || text[pos..end] != **tok {
                return Err(ProviderError::TokenizationMismatch(format!(
                    "token {i} {tok:?} does not match echoed text at byte {pos}"
                )));
            }
            if end > answer_start {
                let lp = lp.ok_or_else(|| {
                    ProviderError::MalformedResponse(format!("token {i} has no logprob"))
                })?;
                let start = pos.max(answer_start) - answer_start;
                let stop = end - answer_start;
                out.push(TokenScore {
                    text: answer[start..stop].to_string(),
                    logprob: self.log_base.to_natural(lp),
                    span: Span::new(start, stop),
                });
            }
            pos = end;
        }
        if pos < text.len() {
            return Err(ProviderError::TokenizationMismatch(format!(
                "echo stops at byte {pos} of {}",
                text.len()
            )));
        }
        Ok(out)
    }
}

impl ScoringProvider for RemoteScorer {
    fn score_answer(&self, request: &ScoringRequest) -> Result<Vec<TokenScore>, ProviderError> {
        request.validate()?;
        let (text, _) = self.scored_text(request);
        let response = self.endpoint.post(&self.request_body(&text))?;
        self.parse_response(response, request)
    }

    fn max_in_flight(&self) -> usize {
        self.endpoint.config().max_in_flight
    }
}
