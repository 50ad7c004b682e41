//! ConSens: how strongly an LLM answer is grounded in the context it was
//! given.
//!
//! The answer is teacher-force scored twice, once with the context in the
//! prompt and once with an empty context. After dropping closed-class words
//! and words copied from the question, the two text perplexities are
//! contrasted:
//!
//! ```text
//! r       = log(P_empty / P_context)
//! ConSens = 2 / (1 + e^(−r)) − 1        ∈ (−1, 1)
//! ```
//!
//! The numeric kernels in [`metric`] and [`harness::stats`] are generic over
//! [`Scalar`] (`f32` or `f64`); the aliases below fix the scalar for callers
//! that do not care. The scoring pipeline runs in `f64`.

pub mod harness;
pub mod metric;
pub mod provider;
mod scalar;
pub mod scorer;
pub mod synthetic;
pub mod textproc;

pub use metric::{
    aggregate_log_perplexity, aggregate_perplexities, consens_score, sigmoid_score,
    token_perplexity, MetricError, Span,
};
pub use scalar::Scalar;

pub type TokenScore = metric::TokenScore<f64>;
pub type TokenScore32 = metric::TokenScore<f32>;
pub type LogPerplexity = metric::LogPerplexity<f64>;
pub type LogPerplexity32 = metric::LogPerplexity<f32>;
pub type ConSensResult = metric::ConSensResult<f64>;
pub type ConSensResult32 = metric::ConSensResult<f32>;
pub type WordPerplexity = metric::WordPerplexity<f64>;
pub type Interval = harness::stats::Interval<f64>;
pub type Interval32 = harness::stats::Interval<f32>;

pub use provider::{ProviderError, ScoringProvider, ScoringRequest};
pub use scorer::{attribute_documents, score_example, AttributionResult, QaExample, ScoreError};
pub use textproc::{FilterConfig, WordStatus, WordUnit};
