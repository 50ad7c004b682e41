use super::{UnitKind, WordStatus, WordUnit};
use crate::metric::Span;

pub(crate) fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_apostrophe(c)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Class {
    Word,
    Space,
    Other,
}

fn class_of(c: char) -> Class {
    if c.is_whitespace() {
        Class::Space
    } else if is_word_char(c) {
        Class::Word
    } else {
        Class::Other
    }
}

/// Splits `answer` into word and punctuation units covering every
/// non-whitespace character exactly once.
pub fn segment_words(answer: &str) -> Vec<WordUnit> {
    // (class, start, end)
    let mut runs: Vec<(Class, usize, usize)> = Vec::new();
    for (i, c) in answer.char_indices() {
        let class = class_of(c);
        let end = i + c.len_utf8();
        match runs.last_mut() {
            Some((last, _, e)) if *last == class => *e = end,
            _ => runs.push((class, i, end)),
        }
    }

    let mut units: Vec<WordUnit> = Vec::new();
    for (class, start, end) in runs {
        let kind = match class {
            Class::Space => continue,
            Class::Word if answer[start..end].chars().any(char::is_alphanumeric) => UnitKind::Word,
            // a bare apostrophe run is punctuation
            _ => UnitKind::Punctuation,
        };

        if kind == UnitKind::Punctuation {
            if let Some(prev) = units.last_mut() {
                if prev.kind == UnitKind::Punctuation && prev.span.end == start {
                    prev.span.end = end;
                    prev.text = answer[prev.span.start..end].to_string();
                    continue;
                }
            }
        }

        units.push(WordUnit {
            text: answer[start..end].to_string(),
            span: Span::new(start, end),
            kind,
            token_indices: Vec::new(),
            status: match kind {
                UnitKind::Word => WordStatus::Retained,
                UnitKind::Punctuation => WordStatus::ExcludedPunctuation,
            },
        });
    }
    units
}
