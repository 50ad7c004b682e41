//! Word-bigram reference language model with add-alpha smoothing.
//!
//! Units are the word and punctuation units of [`segment_words`], lowercased.
//! Corpus words map to ids `0..V`; everything unseen shares the unknown id
//! `V`, so every conditional distribution ranges over `V + 1` outcomes:
//!
//! ```text
//! P(w | h) = (c(h, w) + β·k(w) + α) / (c(h, ·) + β·K + α·(V + 1))
//! ```
//!
//! `c(h, ·)` counts `h` as a left context, so each row sums to one. The first
//! answer unit uses unigram counts in place of the bigram row. `k(w)` is the
//! number of times `w` occurs in the prompt and `K` the prompt length in
//! units: the prompt is added as pseudo-counts with weight `β` to every row,
//! which is how conditioning on a context raises the probability of words
//! drawn from it. Bigram history never crosses from the prompt into the
//! answer.

use std::collections::HashMap;

use super::{ProviderError, ScoringProvider, ScoringRequest};
use crate::metric::{Span, TokenScore};
use crate::textproc::segment_words;

pub const DEFAULT_PROMPT_WEIGHT: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct ReferenceLm {
    vocabulary: HashMap<String, usize>,
    unigram_counts: Vec<f64>,
    context_counts: Vec<f64>,
    bigram_counts: HashMap<(usize, usize), f64>,
    total_units: f64,
    smoothing_alpha: f64,
    prompt_weight: f64,
}

fn units(text: &str) -> impl Iterator<Item = String> + '_ {
    segment_words(text).into_iter().map(|u| u.text.to_lowercase())
}

/// Trains on `corpus`; each entry is an independent sequence.
pub fn train_reference_lm<S: AsRef<str>>(corpus: &[S], alpha: f64) -> Result<ReferenceLm, ProviderError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ProviderError::InvalidSmoothing(alpha));
    }

    let mut vocabulary: HashMap<String, usize> = HashMap::new();
    let mut sequences: Vec<Vec<usize>> = Vec::with_capacity(corpus.len());
    for line in corpus {
        let seq: Vec<usize> = units(line.as_ref())
            .map(|u| {
                let next = vocabulary.len();
                *vocabulary.entry(u).or_insert(next)
            })
            .collect();
        sequences.push(seq);
    }
    if vocabulary.is_empty() {
        return Err(ProviderError::EmptyCorpus);
    }

    let v = vocabulary.len();
    let mut unigram_counts = vec![0.0; v + 1];
    let mut context_counts = vec![0.0; v + 1];
    let mut bigram_counts: HashMap<(usize, usize), f64> = HashMap::new();
    let mut total_units = 0.0;
    for seq in &sequences {
        for &w in seq {
            unigram_counts[w] += 1.0;
            total_units += 1.0;
        }
        for pair in seq.windows(2) {
            context_counts[pair[0]] += 1.0;
            *bigram_counts.entry((pair[0], pair[1])).or_insert(0.0) += 1.0;
        }
    }

    Ok(ReferenceLm {
        vocabulary,
        unigram_counts,
        context_counts,
        bigram_counts,
        total_units,
        smoothing_alpha: alpha,
        prompt_weight: DEFAULT_PROMPT_WEIGHT,
    })
}

/// Pseudo-counts contributed by one prompt. Lives only for one request.
struct PromptCounts {
    per_unit: HashMap<usize, f64>,
    total: f64,
}

impl ReferenceLm {
    /// Weight of each prompt occurrence; `0.0` disables prompt adaptation.
    pub fn with_prompt_weight(mut self, weight: f64) -> Self {
        assert!(weight >= 0.0 && weight.is_finite(), "prompt weight must be non-negative");
        self.prompt_weight = weight;
        self
    }

    pub fn prompt_weight(&self) -> f64 {
        self.prompt_weight
    }

    pub fn smoothing_alpha(&self) -> f64 {
        self.smoothing_alpha
    }

    /// Corpus vocabulary size, not counting the unknown symbol.
    pub fn vocabulary_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.vocabulary.keys().map(String::as_str)
    }

    fn unknown_id(&self) -> usize {
        self.vocabulary.len()
    }

    /// Id of a normalized unit; unseen units share the unknown id.
    pub fn unit_id(&self, unit: &str) -> usize {
        self.vocabulary
            .get(&unit.to_lowercase())
            .copied()
            .unwrap_or_else(|| self.unknown_id())
    }

    pub fn unigram_count(&self, unit: &str) -> f64 {
        self.unigram_counts[self.unit_id(unit)]
    }

    pub fn bigram_count(&self, prev: &str, unit: &str) -> f64 {
        let key = (self.unit_id(prev), self.unit_id(unit));
        self.bigram_counts.get(&key).copied().unwrap_or(0.0)
    }

    fn prompt_counts(&self, prompt: &str) -> PromptCounts {
        let mut per_unit = HashMap::new();
        let mut total = 0.0;
        if self.prompt_weight > 0.0 {
            for u in units(prompt) {
                *per_unit.entry(self.unit_id(&u)).or_insert(0.0) += self.prompt_weight;
                total += self.prompt_weight;
            }
        }
        PromptCounts { per_unit, total }
    }

    fn probability(&self, prev: Option<usize>, w: usize, prompt: &PromptCounts) -> f64 {
        let alpha = self.smoothing_alpha;
        let outcomes = (self.vocabulary.len() + 1) as f64;
        let (count, row_total) = match prev {
            None => (self.unigram_counts[w], self.total_units),
            Some(h) => (
                self.bigram_counts.get(&(h, w)).copied().unwrap_or(0.0),
                self.context_counts[h],
            ),
        };
        let pseudo = prompt.per_unit.get(&w).copied().unwrap_or(0.0);
        (count + pseudo + alpha) / (row_total + prompt.total + alpha * outcomes)
    }

    /// `P(unit | prev)` under `prompt`; `prev = None` is the first answer unit.
    pub fn conditional_probability(&self, prompt: &str, prev: Option<&str>, unit: &str) -> f64 {
        let counts = self.prompt_counts(prompt);
        self.probability(prev.map(|p| self.unit_id(p)), self.unit_id(unit), &counts)
    }

    /// Sum of `P(· | prev)` over the vocabulary plus the unknown symbol.
    pub fn row_mass(&self, prompt: &str, prev: Option<&str>) -> f64 {
        let counts = self.prompt_counts(prompt);
        let h = prev.map(|p| self.unit_id(p));
        (0..=self.vocabulary.len())
            .map(|w| self.probability(h, w, &counts))
            .sum()
    }
}

impl ScoringProvider for ReferenceLm {
    fn score_answer(&self, request: &ScoringRequest) -> Result<Vec<TokenScore>, ProviderError> {
        request.validate()?;
        let answer = request.answer.as_str();
        let segments = segment_words(answer);
        if segments.is_empty() {
            return Err(ProviderError::InvalidRequest(
                "answer has no words or punctuation".into(),
            ));
        }
        let counts = self.prompt_counts(&request.prompt);

        let last = segments.len() - 1;
        let mut tokens = Vec::with_capacity(segments.len());
        let mut prev: Option<usize> = None;
        let mut start = 0;
        for (i, seg) in segments.iter().enumerate() {
            // each token carries the whitespace before its unit; the last
            // one also takes any trailing whitespace
            let end = if i == last { answer.len() } else { seg.span.end };
            let w = self.unit_id(&seg.text);
            tokens.push(TokenScore {
                text: answer[start..end].to_string(),
                logprob: self.probability(prev, w, &counts).ln(),
                span: Span::new(start, end),
            });
            prev = Some(w);
            start = end;
        }
        Ok(tokens)
    }

    fn max_in_flight(&self) -> usize {
        std::thread::available_parallelism().map_or(4, |n| n.get())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lm(corpus: &[&str]) -> ReferenceLm {
        train_reference_lm(corpus, 1.0).unwrap()
    }

    #[test]
    fn single_observation_counts() {
        let m = lm(&["a b"]);
        assert_eq!(m.bigram_count("a", "b"), 1.0);
        assert_eq!(m.unigram_count("a"), 1.0);
        assert_eq!(m.vocabulary_size(), 2);
        // (1 + 1) / (1 + 3)
        assert_eq!(m.conditional_probability("", Some("a"), "b"), 0.5);
    }

    #[test]
    fn hand_computed_logprobs() {
        let m = lm(&["a b a b"]);
        let tokens = m.score_answer(&ScoringRequest::new("", "a b")).unwrap();
        assert_eq!(tokens.len(), 2);
        assert_eq!(tokens[0].text, "a");
        assert_eq!(tokens[1].text, " b");
        // unigram: a=2 of N=4, |V|+1 = 3 -> 3/7
        assert!((tokens[0].logprob - (3.0_f64 / 7.0).ln()).abs() < 1e-15);
        // c(a,b)=2, c(a,.)=2 -> 3/5
        assert!((tokens[1].logprob - (3.0_f64 / 5.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn invalid_training_inputs() {
        assert!(matches!(
            train_reference_lm(&["a"], 0.0),
            Err(ProviderError::InvalidSmoothing(_))
        ));
        assert!(matches!(
            train_reference_lm(&["a"], f64::NAN),
            Err(ProviderError::InvalidSmoothing(_))
        ));
        assert_eq!(
            train_reference_lm::<&str>(&[], 1.0).unwrap_err(),
            ProviderError::EmptyCorpus
        );
        assert_eq!(
            train_reference_lm(&["  ", ""], 1.0).unwrap_err(),
            ProviderError::EmptyCorpus
        );
    }

    #[test]
    fn rows_sum_to_one() {
        let m = lm(&["the cat sat on the mat .", "a dog sat"]);
        for prompt in ["", "the zebra on a mat mat"] {
            for prev in [None, Some("the"), Some("sat"), Some("."), Some("unseen")] {
                let mass = m.row_mass(prompt, prev);
                assert!((mass - 1.0).abs() < 1e-9, "prompt {prompt:?} prev {prev:?}: {mass}");
            }
        }
    }

    #[test]
    fn word_in_prompt_only_gains_probability() {
        let m = lm(&["the cat sat on the mat"]);
        let req_empty = ScoringRequest::new("", "zebra");
        let req_ctx = ScoringRequest::new("a zebra appeared", "zebra");
        let e = m.score_answer(&req_empty).unwrap()[0].logprob;
        let c = m.score_answer(&req_ctx).unwrap()[0].logprob;
        assert!(c > e);
    }

    #[test]
    fn zero_weight_ignores_prompt() {
        let m = lm(&["the cat sat"]).with_prompt_weight(0.0);
        let a = m.score_answer(&ScoringRequest::new("", "cat sat")).unwrap();
        let b = m.score_answer(&ScoringRequest::new("cat cat cat", "cat sat")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tokens_reproduce_answer() {
        let m = lm(&["x"]);
        let answer = "  Hello, world!  ";
        let tokens = m.score_answer(&ScoringRequest::new("", answer)).unwrap();
        let joined: String = tokens.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(joined, answer);
        for t in &tokens {
            assert_eq!(&answer[t.span.start..t.span.end], t.text);
        }
    }

    #[test]
    fn whitespace_answer_rejected() {
        let m = lm(&["x"]);
        assert!(m.score_answer(&ScoringRequest::new("", "   ")).is_err());
        assert!(m.score_answer(&ScoringRequest::new("", "")).is_err());
    }
}
