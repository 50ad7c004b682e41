use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::{hdi, mean, roc_auc, Interval, DEFAULT_HDI_MASS};
use super::HarnessError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub id: String,
    pub score_a: f64,
    pub score_b: f64,
}

/// Condition A against condition B; A supplies the ROC positives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedStats {
    pub roc_auc: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub mean_diff: f64,
    pub hdi_mass: f64,
    /// Absent with fewer than two examples.
    pub hdi_a: Option<Interval>,
    pub hdi_b: Option<Interval>,
    pub hdi_diff: Option<Interval>,
}

impl PairedStats {
    pub fn compute(a: &[f64], b: &[f64]) -> Result<Self, HarnessError> {
        if a.is_empty() || a.len() != b.len() {
            return Err(HarnessError::NoUsableExamples);
        }
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let interval = |xs: &[f64]| {
            if xs.len() < 2 {
                Ok(None)
            } else {
                hdi(xs, DEFAULT_HDI_MASS).map(Some)
            }
        };
        Ok(Self {
            roc_auc: roc_auc(a, b)?,
            mean_a: mean(a)?,
            mean_b: mean(b)?,
            mean_diff: mean(&diff)?,
            hdi_mass: DEFAULT_HDI_MASS,
            hdi_a: interval(a)?,
            hdi_b: interval(b)?,
            hdi_diff: interval(&diff)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    /// `consens` or `similarity`.
    pub metric: String,
    pub n_examples: usize,
    #[serde(flatten)]
    pub stats: PairedStats,
    pub per_example: Vec<PairScore>,
    pub failures: Vec<Failure>,
}

impl ExperimentReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| HarnessError::Io(e.to_string());
        w.write_record(["id", "score_a", "score_b"]).map_err(io)?;
        for p in &self.per_example {
            w.write_record([p.id.clone(), p.score_a.to_string(), p.score_b.to_string()])
                .map_err(io)?;
        }
        w.flush().map_err(|e| HarnessError::Io(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionOutcome {
    pub id: String,
    pub correct_doc_index: usize,
    pub most_influential_index: usize,
    pub hit: bool,
    /// Score with document `i` left out, for each `i`.
    pub leave_one_out_scores: Vec<f64>,
    /// Lowest score among contexts that still contain the correct document.
    pub score_correct_included: f64,
    pub score_correct_excluded: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub schema_version: u32,
    pub experiment: String,
    pub metric: String,
    pub n_examples: usize,
    /// Fraction of examples where removing the correct document lowers the
    /// score the most.
    pub hit_rate: f64,
    /// A = correct document included, B = excluded.
    #[serde(flatten)]
    pub stats: PairedStats,
    pub per_example: Vec<AttributionOutcome>,
    pub failures: Vec<Failure>,
}

impl AttributionReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| HarnessError::Io(e.to_string());
        w.write_record([
            "id",
            "correct_doc_index",
            "most_influential_index",
            "hit",
            "score_correct_included",
            "score_correct_excluded",
            "leave_one_out_scores",
        ])
        .map_err(io)?;
        for o in &self.per_example {
            let loo = o
                .leave_one_out_scores
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(";");
            w.write_record([
                o.id.clone(),
                o.correct_doc_index.to_string(),
                o.most_influential_index.to_string(),
                o.hit.to_string(),
                o.score_correct_included.to_string(),
                o.score_correct_excluded.to_string(),
                loo,
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| HarnessError::Io(e.to_string()))
    }
}
