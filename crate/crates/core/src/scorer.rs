//! End-to-end ConSens scoring of one example and leave-one-out document
//! attribution.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{aggregate_log_perplexity, consens_score, MetricError, WordPerplexity};
use crate::provider::{render_prompt, ProviderError, ScoringProvider, ScoringRequest};
use crate::textproc::{
    align_tokens_to_words, filter_words, segment_words, FilterConfig, TextError, WordStatus,
    WordUnit,
};
use crate::{ConSensResult, TokenScore};

/// Documents are joined into one context with a blank line between them.
pub const DOCUMENT_SEPARATOR: &str = "\n\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaExample {
    pub id: String,
    pub question: String,
    pub documents: Vec<String>,
    pub answer: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tags: BTreeMap<String, String>,
}

impl QaExample {
    pub fn new(
        id: impl Into<String>,
        question: impl Into<String>,
        documents: Vec<String>,
        answer: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            question: question.into(),
            documents,
            answer: answer.into(),
            tags: BTreeMap::new(),
        }
    }

    pub fn context(&self) -> String {
        join_documents(&self.documents)
    }

    /// The same example with document `index` removed, order preserved.
    pub fn without_document(&self, index: usize) -> QaExample {
        let mut documents = self.documents.clone();
        documents.remove(index);
        QaExample {
            documents,
            ..self.clone()
        }
    }
}

pub fn join_documents<S: AsRef<str>>(documents: &[S]) -> String {
    documents
        .iter()
        .map(AsRef::as_ref)
        .collect::<Vec<_>>()
        .join(DOCUMENT_SEPARATOR)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("example has no context documents")]
    EmptyContext,
    #[error("invalid example: {0}")]
    InvalidExample(String),
    #[error("no scorable words in answer ({})", describe_exclusions(.words))]
    NoScorableWords { words: Vec<(String, WordStatus)> },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

fn describe_exclusions(words: &[(String, WordStatus)]) -> String {
    if words.is_empty() {
        return "answer has no words".to_string();
    }
    words
        .iter()
        .map(|(w, s)| format!("{w:?}: {}", s.reason()))
        .collect::<Vec<_>>()
        .join(", ")
}

fn no_scorable(words: &[WordUnit]) -> ScoreError {
    ScoreError::NoScorableWords {
        words: words.iter().map(|w| (w.text.clone(), w.status)).collect(),
    }
}

/// Scores `answer` under two explicit prompts. `empty_prompt` plays the
/// part of `P_E` and `context_prompt` that of `P_C`; exchanging them negates
/// the score.
pub fn score_prompts<P: ScoringProvider + ?Sized>(
    question: &str,
    answer: &str,
    empty_prompt: &str,
    context_prompt: &str,
    provider: &P,
    filter: &FilterConfig,
) -> Result<ConSensResult, ScoreError> {
    if answer.trim().is_empty() {
        return Err(ScoreError::InvalidExample("answer is empty".into()));
    }
    let words = filter_words(&segment_words(answer), question, filter);
    if !words.iter().any(|w| w.status.is_retained()) {
        return Err(no_scorable(&words));
    }

    let empty_req = ScoringRequest::new(empty_prompt, answer);
    let context_req = ScoringRequest::new(context_prompt, answer);
    let (empty_tokens, context_tokens) = rayon::join(
        || provider.score_answer(&empty_req),
        || provider.score_answer(&context_req),
    );
    let empty_tokens = empty_tokens?;
    let context_tokens = context_tokens?;

    let empty_words = align_tokens_to_words(&empty_tokens, &words, answer)?;
    let context_words = align_tokens_to_words(&context_tokens, &words, answer)?;

    // a word is kept only if both conditions give it tokens, so the two
    // perplexities always cover the same words
    let mut final_words = words;
    for (i, w) in final_words.iter_mut().enumerate() {
        if w.status.is_retained()
            && (empty_words[i].token_indices.is_empty() || context_words[i].token_indices.is_empty())
        {
            w.status = WordStatus::ExcludedUnaligned;
        }
    }
    if !final_words.iter().any(|w| w.status.is_retained()) {
        return Err(no_scorable(&final_words));
    }

    let mut empty_lps = Vec::new();
    let mut context_lps = Vec::new();
    let mut details = Vec::new();
    for (i, w) in final_words.iter().enumerate() {
        if !w.status.is_retained() {
            continue;
        }
        let e = word_logprobs(&empty_tokens, &empty_words[i]);
        let c = word_logprobs(&context_tokens, &context_words[i]);
        details.push(WordPerplexity {
            word: w.text.clone(),
            span: w.span,
            log_empty: -e.iter().sum::<f64>(),
            log_context: -c.iter().sum::<f64>(),
        });
        empty_lps.extend(e);
        context_lps.extend(c);
    }

    let mut result = consens_score(
        aggregate_log_perplexity(&empty_lps)?,
        aggregate_log_perplexity(&context_lps)?,
    )?;
    result.word_details = details;
    Ok(result)
}

fn word_logprobs(tokens: &[TokenScore], word: &WordUnit) -> Vec<f64> {
    word.token_indices.iter().map(|&t| tokens[t].logprob).collect()
}

/// ConSens of the example's answer: all documents as context versus an
/// empty context.
pub fn score_example<P: ScoringProvider + ?Sized>(
    example: &QaExample,
    provider: &P,
    filter: &FilterConfig,
) -> Result<ConSensResult, ScoreError> {
    if example.documents.is_empty() {
        return Err(ScoreError::EmptyContext);
    }
    let context_prompt = render_prompt(&example.context(), &example.question)?;
    let empty_prompt = render_prompt("", &example.question)?;
    score_prompts(
        &example.question,
        &example.answer,
        &empty_prompt,
        &context_prompt,
        provider,
        filter,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentScore {
    pub document_index: usize,
    /// ConSens with this document left out of the context.
    pub result: ConSensResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub per_document_scores: Vec<DocumentScore>,
    /// The document whose removal gives the lowest score.
    pub most_influential_index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_context_score: Option<ConSensResult>,
}

/// Index of the smallest score; ties go to the lowest index.
pub fn argmin_lowest(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s < scores[b]) {
            best = Some(i);
        }
    }
    best
}

pub fn attribute_documents<P: ScoringProvider + ?Sized>(
    example: &QaExample,
    provider: &P,
    filter: &FilterConfig,
    with_full_context: bool,
) -> Result<AttributionResult, ScoreError> {
    let k = example.documents.len();
    if k < 2 {
        return Err(ScoreError::EmptyContext);
    }

    let per_document_scores = (0..k)
        .into_par_iter()
        .map(|i| {
            score_example(&example.without_document(i), provider, filter).map(|result| DocumentScore {
                document_index: i,
                result,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let scores: Vec<f64> = per_document_scores.iter().map(|d| d.result.score).collect();
    let most_influential_index = argmin_lowest(&scores).expect("at least two documents");

    let full_context_score = if with_full_context {
        Some(score_example(example, provider, filter)?)
    } else {
        None
    };

    Ok(AttributionResult {
        per_document_scores,
        most_influential_index,
        full_context_score,
    })
}
