use rayon::prelude::*;

use super::dataset::{AttributionRecord, PairwiseRecord};
use super::report::{
    AttributionOutcome, AttributionReport, ExperimentReport, Failure, PairScore, PairedStats,
    REPORT_SCHEMA_VERSION,
};
use super::HarnessError;
use crate::provider::{cosine_similarity, EmbeddingProvider, ScoringProvider};
use crate::scorer::{
    argmin_lowest, attribute_documents, join_documents, score_example, QaExample, ScoreError,
};
use crate::textproc::FilterConfig;

/// A per-example metric the protocols can be run with.
pub trait ConditionScorer: Sync {
    /// Short label recorded in reports.
    fn name(&self) -> &'static str;

    fn score(&self, example: &QaExample) -> Result<f64, ScoreError>;

    /// Scores with each document left out in turn.
    fn leave_one_out(&self, example: &QaExample) -> Result<Vec<f64>, ScoreError> {
        if example.documents.len() < 2 {
            return Err(ScoreError::EmptyContext);
        }
        (0..example.documents.len())
            .into_par_iter()
            .map(|i| self.score(&example.without_document(i)))
            .collect()
    }

    fn max_in_flight(&self) -> usize {
        crate::provider::DEFAULT_MAX_IN_FLIGHT
    }
}

pub struct ConSensScorer<P> {
    pub provider: P,
    pub filter: FilterConfig,
}

impl<P: ScoringProvider> ConSensScorer<P> {
    pub fn new(provider: P, filter: FilterConfig) -> Self {
        Self { provider, filter }
    }
}

impl<P: ScoringProvider> ConditionScorer for ConSensScorer<P> {
    fn name(&self) -> &'static str {
        "consens"
    }

    fn score(&self, example: &QaExample) -> Result<f64, ScoreError> {
        score_example(example, &self.provider, &self.filter).map(|r| r.score)
    }

    fn leave_one_out(&self, example: &QaExample) -> Result<Vec<f64>, ScoreError> {
        let attribution = attribute_documents(example, &self.provider, &self.filter, false)?;
        Ok(attribution
            .per_document_scores
            .iter()
            .map(|d| d.result.score)
            .collect())
    }

    fn max_in_flight(&self) -> usize {
        self.provider.max_in_flight()
    }
}

/// Cosine similarity between answer and context embeddings.
pub struct SimilarityScorer<E> {
    pub embedder: E,
}

impl<E: EmbeddingProvider> ConditionScorer for SimilarityScorer<E> {
    fn name(&self) -> &'static str {
        "similarity"
    }

    fn score(&self, example: &QaExample) -> Result<f64, ScoreError> {
        if example.documents.is_empty() {
            return Err(ScoreError::EmptyContext);
        }
        let answer = self.embedder.embed(&example.answer)?;
        let context = self.embedder.embed(&join_documents(&example.documents))?;
        Ok(cosine_similarity(&answer, &context)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    /// Worker pool size; `None` uses the scorer's in-flight cap.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { workers: None }
    }
}

fn run_pool<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(e) => {
            log::warn!("cannot build worker pool ({e}); running sequentially");
            items.iter().map(f).collect()
        }
    }
}

fn example(id: &str, question: &str, documents: &[String], answer: &str) -> QaExample {
    QaExample::new(id, question, documents.to_vec(), answer)
}

fn score_pair<S: ConditionScorer + ?Sized>(record: &PairwiseRecord, scorer: &S) -> Result<(f64, f64), String> {
    let (a, b) = match record {
        PairwiseRecord::VaryAnswer {
            id,
            question,
            documents,
            answer_a,
            answer_b,
        } => (
            example(id, question, documents, answer_a),
            example(id, question, documents, answer_b),
        ),
        PairwiseRecord::VaryContext {
            id,
            question,
            answer,
            documents_a,
            documents_b,
        } => (
            example(id, question, documents_a, answer),
            example(id, question, documents_b, answer),
        ),
    };
    let sa = scorer.score(&a).map_err(|e| format!("condition a: {e}"))?;
    let sb = scorer.score(&b).map_err(|e| format!("condition b: {e}"))?;
    Ok((sa, sb))
}

/// Scores both conditions of every record. Records that fail are listed in
/// `failures` and left out of the statistics.
pub fn run_pairwise<S: ConditionScorer + ?Sized>(
    records: &[PairwiseRecord],
    scorer: &S,
    config: &RunConfig,
) -> Result<ExperimentReport, HarnessError> {
    let workers = config.workers.unwrap_or_else(|| scorer.max_in_flight());
    let mut outcomes: Vec<(String, Result<(f64, f64), String>)> = run_pool(records, workers, |r| {
        (r.id().to_string(), score_pair(r, scorer))
    });
    outcomes.sort_by(|a, b| a.0.cmp(&b.0));

    let mut per_example = Vec::new();
    let mut failures = Vec::new();
    for (id, outcome) in outcomes {
        match outcome {
            Ok((score_a, score_b)) => per_example.push(PairScore { id, score_a, score_b }),
            Err(error) => failures.push(Failure { id, error }),
        }
    }
    if per_example.is_empty() {
        return Err(HarnessError::NoUsableExamples);
    }

    let a: Vec<f64> = per_example.iter().map(|p| p.score_a).collect();
    let b: Vec<f64> = per_example.iter().map(|p| p.score_b).collect();
    Ok(ExperimentReport {
        schema_version: REPORT_SCHEMA_VERSION,
        experiment: "pairwise".into(),
        metric: scorer.name().into(),
        n_examples: per_example.len(),
        stats: PairedStats::compute(&a, &b)?,
        per_example,
        failures,
    })
}

/// The similarity baseline over a pairwise dataset.
pub fn similarity_baseline<E: EmbeddingProvider>(
    records: &[PairwiseRecord],
    embedder: E,
    config: &RunConfig,
) -> Result<ExperimentReport, HarnessError> {
    run_pairwise(records, &SimilarityScorer { embedder }, config)
}

fn attribute_one<S: ConditionScorer + ?Sized>(
    record: &AttributionRecord,
    scorer: &S,
) -> Result<AttributionOutcome, String> {
    let ex = QaExample::new(
        record.id.clone(),
        record.question.clone(),
        record.documents.clone(),
        record.answer.clone(),
    );
    let scores = scorer.leave_one_out(&ex).map_err(|e| e.to_string())?;
    let correct = record.correct_doc_index;
    let most_influential_index = argmin_lowest(&scores).ok_or("no documents")?;
    let score_correct_included = scores
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != correct)
        .map(|(_, &s)| s)
        .fold(f64::INFINITY, f64::min);
    Ok(AttributionOutcome {
        id: record.id.clone(),
        correct_doc_index: correct,
        most_influential_index,
        hit: most_influential_index == correct,
        score_correct_excluded: scores[correct],
        score_correct_included,
        leave_one_out_scores: scores,
    })
}

pub fn run_attribution<S: ConditionScorer + ?Sized>(
    records: &[AttributionRecord],
    scorer: &S,
    config: &RunConfig,
) -> Result<AttributionReport, HarnessError> {
    let workers = config.workers.unwrap_or_else(|| scorer.max_in_flight());
    let mut outcomes: Vec<(String, Result<AttributionOutcome, String>)> =
        run_pool(records, workers, |r| (r.id.clone(), attribute_one(r, scorer)));
    outcomes.sort_by(|a, b| a.0.cmp(&b.0));

    let mut per_example = Vec::new();
    let mut failures = Vec::new();
    for (id, outcome) in outcomes {
        match outcome {
            Ok(o) => per_example.push(o),
            Err(error) => failures.push(Failure { id, error }),
        }
    }
    if per_example.is_empty() {
        return Err(HarnessError::NoUsableExamples);
    }

    let hits = per_example.iter().filter(|o| o.hit).count();
    let included: Vec<f64> = per_example.iter().map(|o| o.score_correct_included).collect();
    let excluded: Vec<f64> = per_example.iter().map(|o| o.score_correct_excluded).collect();
    Ok(AttributionReport {
        schema_version: REPORT_SCHEMA_VERSION,
        experiment: "attribution".into(),
        metric: scorer.name().into(),
        n_examples: per_example.len(),
        hit_rate: hits as f64 / per_example.len() as f64,
        stats: PairedStats::compute(&included, &excluded)?,
        per_example,
        failures,
    })
}
