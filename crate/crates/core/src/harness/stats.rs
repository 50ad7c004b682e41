//! ROC AUC, highest density interval and mean.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("interval mass must lie in (0, 1], got {0}")]
    InvalidMass(f64),
    #[error("scores must be finite")]
    NonFinite,
}

pub const DEFAULT_HDI_MASS: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T = f64> {
    pub low: T,
    pub high: T,
}

impl<T: Scalar> Interval<T> {
    pub fn width(&self) -> T {
        self.high - self.low
    }
}

fn check_finite<T: Scalar>(xs: &[T]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

fn sorted<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values are ordered"));
    v
}

/// Area under the ROC curve via the Mann–Whitney U statistic with average
/// ranks for ties: the probability that a random positive outscores a random
/// negative, ties counting one half.
pub fn roc_auc<T: Scalar>(positives: &[T], negatives: &[T]) -> Result<T, StatsError> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(StatsError::InsufficientData(
            "ROC AUC needs at least one positive and one negative score",
        ));
    }
    check_finite(positives)?;
    check_finite(negatives)?;

    let mut all: Vec<(T, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values are ordered"));

    // ranks are 1-based; a tie group spanning ranks lo..=hi gets (lo+hi)/2
    let mut positive_rank_sum = 0.0_f64;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + j + 2) as f64 / 2.0;
        let pos_in_group = all[i..=j].iter().filter(|(_, p)| *p).count();
        positive_rank_sum += avg_rank * pos_in_group as f64;
        i = j + 1;
    }

    let n_pos = positives.len() as f64;
    let n_neg = negatives.len() as f64;
    let u = positive_rank_sum - n_pos * (n_pos + 1.0) / 2.0;
    Ok(T::lit(u / (n_pos * n_neg)))
}

/// Number of samples an interval of `mass` must hold: `ceil(mass · n)`.
///
/// `mass · n` is rounded to the nearest integer first when it lies within a
/// few ulps of it, so that e.g. `0.9 · 30` yields 27 and not 28.
pub fn hdi_window_size(mass: f64, n: usize) -> usize {
    let target = mass * n as f64;
    let nearest = target.round();
    let m = if (target - nearest).abs() <= 8.0 * f64::EPSILON * target.max(1.0) {
        nearest
    } else {
        target.ceil()
    };
    (m as usize).clamp(1, n)
}

/// Shortest interval containing `ceil(mass · n)` of the samples. Among
/// equally short candidates the lowest one wins.
pub fn hdi<T: Scalar>(samples: &[T], mass: f64) -> Result<Interval<T>, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::InsufficientData("HDI needs at least two samples"));
    }
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(StatsError::InvalidMass(mass));
    }
    check_finite(samples)?;

    let xs = sorted(samples);
    let m = hdi_window_size(mass, xs.len());
    let mut best = Interval {
        low: xs[0],
        high: xs[m - 1],
    };
    for w in xs.windows(m).skip(1) {
        let candidate = Interval {
            low: w[0],
            high: w[m - 1],
        };
        if candidate.width() < best.width() {
            best = candidate;
        }
    }
    Ok(best)
}

pub fn mean<T: Scalar>(xs: &[T]) -> Result<T, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::InsufficientData("mean of an empty sample"));
    }
    check_finite(xs)?;
    let sum = xs.iter().fold(T::zero(), |acc, &x| acc + x);
    Ok(sum / T::from_count(xs.len()))
}
