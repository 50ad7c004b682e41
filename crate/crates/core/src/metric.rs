//! Numeric kernel: token perplexity, aggregate text perplexity and the
//! ConSens score.
//!
//! Text perplexity is the arithmetic mean of per-token reciprocal
//! probabilities, `P = (1/N) Σ e^(−logprob_i)`, not the geometric mean used
//! for corpus perplexity. Everything is carried in log space so that
//! logprobs far below `−709` (where `e^(−logprob)` overflows an `f64`) stay
//! finite.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("logprob at position {index} is not finite ({value})")]
    InvalidLogprob { index: usize, value: f64 },
    #[error("no scorable tokens")]
    NoScorableTokens,
}

/// Half-open byte interval `[start, end)` into the answer string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// Number of bytes shared with `other`.
    pub fn overlap(&self, other: &Span) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        hi.saturating_sub(lo)
    }
}

/// One teacher-forced token of the answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenScore<T = f64> {
    pub text: String,
    /// Natural-log conditional probability. Slightly positive values are
    /// tolerated; some quantized backends report them.
    pub logprob: T,
    pub span: Span,
}

/// Natural log of an aggregate text perplexity over `token_count` tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPerplexity<T = f64> {
    pub value: T,
    pub token_count: usize,
}

impl<T: Scalar> LogPerplexity<T> {
    pub fn perplexity(&self) -> T {
        self.value.exp()
    }
}

/// Per-word diagnostics: log of the word's reciprocal probability under each
/// condition (the negated sum of its token logprobs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordPerplexity<T = f64> {
    pub word: String,
    pub span: Span,
    pub log_empty: T,
    pub log_context: T,
}

impl<T: Scalar> WordPerplexity<T> {
    pub fn perplexity_empty(&self) -> T {
        self.log_empty.exp()
    }

    pub fn perplexity_context(&self) -> T {
        self.log_context.exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConSensResult<T = f64> {
    pub log_p_empty: LogPerplexity<T>,
    pub log_p_context: LogPerplexity<T>,
    /// `log(P_E / P_C)`.
    pub r: T,
    /// In `(−1, 1)`; positive when the context makes the answer more likely.
    pub score: T,
    #[serde(default)]
    pub word_details: Vec<WordPerplexity<T>>,
}

fn check_finite<T: Scalar>(index: usize, logprob: T) -> Result<(), MetricError> {
    if logprob.is_finite() {
        Ok(())
    } else {
        Err(MetricError::InvalidLogprob {
            index,
            value: logprob.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// `e^(−logprob)`, the reciprocal probability of one token.
pub fn token_perplexity<T: Scalar>(logprob: T) -> Result<T, MetricError> {
    check_finite(0, logprob)?;
    Ok((-logprob).exp())
}

/// `log((1/N) Σ e^(−logprob_i))`, evaluated as a shifted log-sum-exp.
///
/// The terms are summed in sorted order so the result does not depend on
/// the order of `logprobs`.
pub fn aggregate_log_perplexity<T: Scalar>(logprobs: &[T]) -> Result<LogPerplexity<T>, MetricError> {
    if logprobs.is_empty() {
        return Err(MetricError::NoScorableTokens);
    }
    for (i, &lp) in logprobs.iter().enumerate() {
        check_finite(i, lp)?;
    }

    let mut neg: Vec<T> = logprobs.iter().map(|&lp| -lp).collect();
    neg.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite values are ordered"));
    let max = *neg.last().expect("non-empty");

    let sum = neg
        .iter()
        .fold(T::zero(), |acc, &x| acc + (x - max).exp());
    let n = logprobs.len();
    let value = max + sum.ln() - T::from_count(n).ln();

    Ok(LogPerplexity {
        value,
        token_count: n,
    })
}

/// Aggregates already-exponentiated token (or word) perplexities.
pub fn aggregate_perplexities<T: Scalar>(perplexities: &[T]) -> Result<LogPerplexity<T>, MetricError> {
    let logprobs: Vec<T> = perplexities.iter().map(|&p| -p.ln()).collect();
    aggregate_log_perplexity(&logprobs)
}

/// `2 / (1 + e^(−r)) − 1`.
///
/// Evaluated as `(1 − e^(−|r|)) / (1 + e^(−|r|))` with the sign of `r`
/// restored, which is the same function but keeps full precision near zero
/// and is exactly odd.
pub fn sigmoid_score<T: Scalar>(r: T) -> T {
    let a = r.abs();
    let em1 = (-a).exp_m1();
    let mag = -em1 / (T::lit(2.0) + em1);
    if r < T::zero() {
        -mag
    } else {
        mag
    }
}

pub fn consens_score<T: Scalar>(
    log_p_empty: LogPerplexity<T>,
    log_p_context: LogPerplexity<T>,
) -> Result<ConSensResult<T>, MetricError> {
    check_finite(0, log_p_empty.value)?;
    check_finite(1, log_p_context.value)?;
    let r = log_p_empty.value - log_p_context.value;
    Ok(ConSensResult {
        log_p_empty,
        log_p_context,
        r,
        score: sigmoid_score(r),
        word_details: Vec::new(),
    })
}
