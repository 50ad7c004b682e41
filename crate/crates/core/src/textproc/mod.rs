//! Answer segmentation, word filtering and token-to-word alignment.
//!
//! Words are maximal runs of letters, digits and apostrophes that contain at
//! least one letter or digit. Every other non-whitespace run becomes a single
//! punctuation unit, so `"well-known"` segments as `well`, `-`, `known`.

mod align;
mod filter;
mod segment;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::Span;

pub use align::{align_tokens_to_words, retained_token_indices};
pub use filter::{filter_words, parse_stoplist, FilterConfig, DEFAULT_CLOSED_CLASS};
pub use segment::segment_words;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TextError {
    #[error("token {index} span {start}..{end} does not fit answer of length {answer_len}")]
    AlignmentMismatch {
        index: usize,
        start: usize,
        end: usize,
        answer_len: usize,
    },
    #[error("token {index} text {text:?} does not match answer bytes at its span")]
    TokenTextMismatch { index: usize, text: String },
    #[error("cannot read stoplist {path}: {message}")]
    Stoplist { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Word,
    Punctuation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordStatus {
    Retained,
    ExcludedClosedClass,
    ExcludedQuestionOverlap,
    ExcludedPunctuation,
    ExcludedUnaligned,
}

impl WordStatus {
    pub fn is_retained(self) -> bool {
        self == WordStatus::Retained
    }

    pub fn reason(self) -> &'static str {
        match self {
            WordStatus::Retained => "retained",
            WordStatus::ExcludedClosedClass => "closed-class word",
            WordStatus::ExcludedQuestionOverlap => "appears in question",
            WordStatus::ExcludedPunctuation => "punctuation",
            WordStatus::ExcludedUnaligned => "no aligned token",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordUnit {
    pub text: String,
    pub span: Span,
    pub kind: UnitKind,
    pub token_indices: Vec<usize>,
    pub status: WordStatus,
}
