use std::collections::HashSet;
use std::path::Path;

use super::segment::segment_words;
use super::{TextError, UnitKind, WordStatus, WordUnit};

/// The bundled closed-class list.
pub const DEFAULT_CLOSED_CLASS: &str = include_str!("../../data/closed_class.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterConfig {
    pub closed_class_words: HashSet<String>,
    pub normalize_case: bool,
    pub strip_surrounding_punctuation: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self::with_stoplist(parse_stoplist(DEFAULT_CLOSED_CLASS))
    }
}

/// One word per line; blank lines and lines starting with `#` are skipped.
pub fn parse_stoplist(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

impl FilterConfig {
    pub fn with_stoplist<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut config = Self {
            closed_class_words: HashSet::new(),
            normalize_case: true,
            strip_surrounding_punctuation: true,
        };
        config.closed_class_words = words
            .into_iter()
            .map(|w| config.normalize(w.as_ref()))
            .filter(|w| !w.is_empty())
            .collect();
        config
    }

    pub fn from_stoplist_file(path: &Path) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(path).map_err(|e| TextError::Stoplist {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(Self::with_stoplist(parse_stoplist(&text)))
    }

    pub fn normalize(&self, word: &str) -> String {
        let trimmed = if self.strip_surrounding_punctuation {
            word.trim_matches(|c: char| !c.is_alphanumeric())
        } else {
            word
        };
        if self.normalize_case {
            trimmed.to_lowercase()
        } else {
            trimmed.to_string()
        }
    }

    pub fn is_closed_class(&self, word: &str) -> bool {
        self.closed_class_words.contains(&self.normalize(word))
    }

    /// Normalized forms of the words of `question`, punctuation dropped.
    pub fn question_words(&self, question: &str) -> HashSet<String> {
        segment_words(question)
            .into_iter()
            .filter(|u| u.kind == UnitKind::Word)
            .map(|u| self.normalize(&u.text))
            .filter(|w| !w.is_empty())
            .collect()
    }
}

/// Assigns a status to every unit of `words`.
///
/// Question overlap is checked before closed-class membership, so a word in
/// both sets reports `ExcludedQuestionOverlap`. `ExcludedUnaligned` from a
/// previous alignment pass is kept for words that would otherwise be retained.
pub fn filter_words(words: &[WordUnit], question: &str, config: &FilterConfig) -> Vec<WordUnit> {
    let question_words = config.question_words(question);
    words
        .iter()
        .map(|w| {
            let status = if w.kind == UnitKind::Punctuation {
                WordStatus::ExcludedPunctuation
            } else {
                let norm = config.normalize(&w.text);
                if question_words.contains(&norm) {
                    WordStatus::ExcludedQuestionOverlap
                } else if norm.is_empty() || config.closed_class_words.contains(&norm) {
                    WordStatus::ExcludedClosedClass
                } else if w.status == WordStatus::ExcludedUnaligned {
                    WordStatus::ExcludedUnaligned
                } else {
                    WordStatus::Retained
                }
            };
            WordUnit {
                status,
                ..w.clone()
            }
        })
        .collect()
}
