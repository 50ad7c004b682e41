use super::{TextError, WordStatus, WordUnit};
use crate::metric::TokenScore;

fn check_tokens<T>(tokens: &[TokenScore<T>], answer: &str) -> Result<(), TextError> {
    let mut prev_end = 0;
    for (index, t) in tokens.iter().enumerate() {
        let s = t.span;
        let fits = s.start <= s.end
            && s.end <= answer.len()
            && s.start >= prev_end
            && answer.is_char_boundary(s.start)
            && answer.is_char_boundary(s.end);
        if !fits {
            return Err(TextError::AlignmentMismatch {
                index,
                start: s.start,
                end: s.end,
                answer_len: answer.len(),
            });
        }
        if answer[s.start..s.end] != t.text {
            return Err(TextError::TokenTextMismatch {
                index,
                text: t.text.clone(),
            });
        }
        prev_end = s.end;
    }
    Ok(())
}

/// Attaches each token to the word it overlaps most (ties go to the earlier
/// word). Tokens touching no word are dropped; words left without tokens are
/// marked `ExcludedUnaligned`. Existing token assignments are replaced.
pub fn align_tokens_to_words<T>(
    tokens: &[TokenScore<T>],
    words: &[WordUnit],
    answer: &str,
) -> Result<Vec<WordUnit>, TextError> {
    check_tokens(tokens, answer)?;

    let mut out: Vec<WordUnit> = words
        .iter()
        .map(|w| WordUnit {
            token_indices: Vec::new(),
            ..w.clone()
        })
        .collect();

    for (ti, tok) in tokens.iter().enumerate() {
        // first word whose end lies past the token start
        let first = out.partition_point(|w| w.span.end <= tok.span.start);
        let mut best: Option<(usize, usize)> = None;
        for (wi, w) in out.iter().enumerate().skip(first) {
            if w.span.start >= tok.span.end {
                break;
            }
            let ov = w.span.overlap(&tok.span);
            if ov > 0 && best.is_none_or(|(_, b)| ov > b) {
                best = Some((wi, ov));
            }
        }
        if let Some((wi, _)) = best {
            out[wi].token_indices.push(ti);
        }
    }

    for w in &mut out {
        if w.token_indices.is_empty() {
            w.status = WordStatus::ExcludedUnaligned;
        }
    }
    Ok(out)
}

/// Sorted union of token indices owned by retained words.
pub fn retained_token_indices(words: &[WordUnit]) -> Vec<usize> {
    let mut idx: Vec<usize> = words
        .iter()
        .filter(|w| w.status.is_retained())
        .flat_map(|w| w.token_indices.iter().copied())
        .collect();
    idx.sort_unstable();
    idx
}
