//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use consens::harness::{
    hdi, load_dataset_lenient, roc_auc, run_attribution, run_pairwise, ConSensScorer,
    PairwiseRecord, RunConfig,
};
use consens::metric::LogPerplexity;
use consens::provider::{render_prompt, train_reference_lm, HttpConfig, RemoteScorer};
use consens::synthetic::SyntheticWorld;
use consens::textproc::{filter_words, segment_words};
use consens::{aggregate_log_perplexity, aggregate_perplexities, consens_score, FilterConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    check(took < limit, format!("{what} took {took:?}, limit {limit:?}"))
}

// Word perplexities as displayed in the published worked example.
const EMPTY_ROW: [f64; 3] = [4814.38, 7117.1, 1.61];
const CONTEXT_ROWS: [[f64; 3]; 3] = [
    [263.73, 293.92, 1.72],
    [3098.83, 14517.0, 2.01],
    [234191.27, 61734.0, 1.63],
];

fn ac1_worked_example() -> Outcome {
    let empty = aggregate_perplexities(&EMPTY_ROW).map_err(|e| e.to_string())?;
    let mut scores = Vec::new();
    for row in CONTEXT_ROWS {
        let ctx = aggregate_perplexities(&row).map_err(|e| e.to_string())?;
        scores.push(consens_score(empty, ctx).map_err(|e| e.to_string())?.score);
    }
    check((scores[0] - 0.91).abs() <= 0.01, format!("row 1 = {:.4}, want 0.91 ± 0.01", scores[0]))?;
    check(scores[1] < 0.0 && scores[2] < 0.0, format!("rows 2, 3 not negative: {scores:?}"))?;
    check(
        scores[0] > scores[1] && scores[1] > scores[2],
        format!("ordering broken: {scores:?}"),
    )?;
    Ok(format!(
        "rows = {:.3}, {:.3}, {:.3}",
        scores[0], scores[1], scores[2]
    ))
}

fn ac2_closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for r in [0.0f64, 1.0, -1.0, 5.0, -5.0] {
        let result = consens_score(
            LogPerplexity { value: r, token_count: 1 },
            LogPerplexity { value: 0.0, token_count: 1 },
        )
        .map_err(|e| e.to_string())?;
        let sigmoid = 2.0 / (1.0 + (-r).exp()) - 1.0;
        let tanh = (r / 2.0).tanh();
        let err = (result.score - sigmoid).abs().max((result.score - tanh).abs());
        check(err <= 1e-12, format!("r = {r}: error {err:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!("max deviation {worst:e}"))
}

fn ac3_stability() -> Outcome {
    let single = aggregate_log_perplexity(&[-10_000.0]).map_err(|e| e.to_string())?;
    check(single.value == 10_000.0, format!("[-10000] gave {}", single.value))?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs: Vec<f64> = (0..1_000_000).map(|_| rng.gen_range(-30.0..=0.0)).collect();
    let start = Instant::now();
    let got = aggregate_log_perplexity(&xs).map_err(|e| e.to_string())?.value;
    within(start, Duration::from_secs(1), "aggregation of 10^6 logprobs")?;
    let oracle = (xs.iter().map(|x| (-x).exp()).sum::<f64>() / xs.len() as f64).ln();
    let rel = ((got - oracle) / oracle).abs();
    check(got.is_finite() && rel <= 1e-9, format!("relative error {rel:e}"))?;
    Ok(format!("relative error {rel:e}, {:?}", start.elapsed()))
}

fn ac4_filtering() -> Outcome {
    let question = "What is David Baker known for?";
    let answer = "David Baker is a biochemist and computational biologist.";
    let retained: Vec<String> = filter_words(&segment_words(answer), question, &FilterConfig::default())
        .into_iter()
        .filter(|w| w.status.is_retained())
        .map(|w| w.text)
        .collect();
    check(
        retained == ["biochemist", "computational", "biologist"],
        format!("retained {retained:?}"),
    )?;
    Ok(format!("retained {retained:?}"))
}

fn brute_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut credit = 0.0;
    for p in pos {
        for n in neg {
            credit += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    credit / (pos.len() * neg.len()) as f64
}

fn ac5_roc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = Instant::now();
    let mut ties = 0;
    for i in 0..1000 {
        let gen = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let n = rng.gen_range(1..=50);
            (0..n).map(|_| f64::from(rng.gen_range(0..12)) / 4.0).collect()
        };
        let (pos, neg) = (gen(&mut rng), gen(&mut rng));
        if pos.iter().any(|p| neg.contains(p)) {
            ties += 1;
        }
        let got = roc_auc(&pos, &neg).map_err(|e| e.to_string())?;
        let want = brute_auc(&pos, &neg);
        check((got - want).abs() <= 1e-12, format!("instance {i}: {got} vs {want}"))?;
    }
    within(start, Duration::from_secs(5), "1000 ROC instances")?;
    check(ties > 0, "no instance had ties")?;
    Ok(format!("1000 instances ({ties} with ties), {:?}", start.elapsed()))
}

/// Exhaustive search over candidate intervals [s_i, s_j] of the sorted
/// samples, counting members by value (so duplicates are handled on their
/// own terms). Shortest interval holding ceil(0.9 n) samples; lowest start on
/// ties.
fn brute_hdi(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    let need = (9 * n).div_ceil(10);
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let first: Vec<usize> = (0..n).map(|i| s.partition_point(|x| *x < s[i])).collect();
    let last: Vec<usize> = (0..n).map(|i| s.partition_point(|x| *x <= s[i]) - 1).collect();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n {
        for j in i..n {
            let count = last[j] + 1 - first[i];
            if count < need {
                if j == n - 1 {
                    return best.expect("an earlier start already qualified");
                }
                continue;
            }
            let (lo, hi) = (s[i], s[j]);
            best = match best {
                Some((blo, bhi)) if (hi - lo) > (bhi - blo) || ((hi - lo) == (bhi - blo) && lo >= blo) => {
                    Some((blo, bhi))
                }
                _ => Some((lo, hi)),
            };
            // wider j only grows the interval
            break;
        }
    }
    best.expect("n >= 2")
}

fn ac6_hdi_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut spent = Duration::ZERO;
    for i in 0..1000 {
        let n = if i % 10 == 0 { 1000 } else { rng.gen_range(2..=1000) };
        let coarse = i % 3 == 0;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                if coarse {
                    f64::from(rng.gen_range(0..20))
                } else {
                    rng.gen::<f64>().powi(3) * 10.0 - 2.0
                }
            })
            .collect();
        let start = Instant::now();
        let got = hdi(&xs, 0.9).map_err(|e| e.to_string())?;
        spent += start.elapsed();
        let want = brute_hdi(&xs);
        check(
            got.low == want.0 && got.high == want.1,
            format!("set {i} (n = {n}): got ({}, {}), want {want:?}", got.low, got.high),
        )?;
    }
    check(spent < Duration::from_secs(5), format!("1000 HDI sets took {spent:?}"))?;
    Ok(format!("1000 sets, {spent:?} inside hdi"))
}

fn ac7_synthetic_grounding() -> Outcome {
    let start = Instant::now();
    let world = SyntheticWorld::new(2024);
    let lm = train_reference_lm(&world.corpus(), 1.0).map_err(|e| e.to_string())?;
    let scorer = ConSensScorer::new(lm, FilterConfig::default());
    let records = world.pairwise_vary_answer(250);
    let report = run_pairwise(&records, &scorer, &RunConfig::default()).map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(30), "synthetic pairwise run")?;
    check(report.n_examples >= 200, format!("only {} scored records", report.n_examples))?;
    check(
        report.stats.roc_auc >= 0.90,
        format!("ROC AUC {:.4} < 0.90", report.stats.roc_auc),
    )?;
    Ok(format!(
        "ROC AUC {:.4} over {} records (mean {:.3} vs {:.3}), {:?}",
        report.stats.roc_auc,
        report.n_examples,
        report.stats.mean_a,
        report.stats.mean_b,
        start.elapsed()
    ))
}

fn ac8_synthetic_attribution() -> Outcome {
    let start = Instant::now();
    let world = SyntheticWorld::new(77);
    let lm = train_reference_lm(&world.corpus(), 1.0).map_err(|e| e.to_string())?;
    let scorer = ConSensScorer::new(lm, FilterConfig::default());
    let records = world.attribution(250, 3);
    let report = run_attribution(&records, &scorer, &RunConfig::default()).map_err(|e| e.to_string())?;
    check(report.n_examples >= 200, format!("only {} scored records", report.n_examples))?;
    check(report.hit_rate >= 0.90, format!("hit rate {:.4} < 0.90", report.hit_rate))?;

    // fully tied leave-one-out scores must still produce a verdict
    let mut tied = world.attribution(20, 3);
    for r in &mut tied {
        let d = r.documents[0].clone();
        r.documents = vec![d; 3];
    }
    let tie_report = run_attribution(&tied, &scorer, &RunConfig::default()).map_err(|e| e.to_string())?;
    check(
        tie_report.per_example.iter().all(|o| o.most_influential_index == 0),
        "tied records did not resolve to index 0",
    )?;
    within(start, Duration::from_secs(60), "synthetic attribution run")?;
    Ok(format!(
        "hit rate {:.4} over {} records, ROC AUC {:.4}, {:?}",
        report.hit_rate,
        report.n_examples,
        report.stats.roc_auc,
        start.elapsed()
    ))
}

fn ac9_prompt_golden() -> Outcome {
    let got = render_prompt("C", "Q").map_err(|e| e.to_string())?;
    let want = "Consider the following context:\nContext:\nC\nPlease answer the following question:\nQ\nAnswer:";
    check(got.as_bytes() == want.as_bytes(), format!("got {got:?}"))?;
    Ok("byte-identical".into())
}

/// Live-backend run; only when both variables are set.
fn ac10_integration() -> Option<Outcome> {
    let url = std::env::var("CONSENS_SCORING_URL").ok()?;
    let dataset = PathBuf::from(std::env::var("CONSENS_IT_DATASET").ok()?);
    Some((|| {
        let mut cfg = HttpConfig::new(url);
        cfg.api_key = std::env::var("CONSENS_API_KEY").ok();
        let mut scorer = RemoteScorer::new(cfg).map_err(|e| e.to_string())?;
        if let Ok(model) = std::env::var("CONSENS_MODEL") {
            scorer = scorer.with_model(model);
        }
        let (records, bad) = load_dataset_lenient::<PairwiseRecord>(&dataset).map_err(|e| e.to_string())?;
        let report = run_pairwise(
            &records,
            &ConSensScorer::new(scorer, FilterConfig::default()),
            &RunConfig::default(),
        )
        .map_err(|e| e.to_string())?;
        Ok(format!(
            "ROC AUC {:.4} over {} records ({} failures, {} bad lines)",
            report.stats.roc_auc,
            report.n_examples,
            report.failures.len(),
            bad.len()
        ))
    })())
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    match outcome {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            true
        }
        Err(why) => {
            println!("FAIL  {name}: {why}");
            false
        }
    }
}

fn main() {
    let mut ok = true;
    ok &= run("AC1 worked example from published word perplexities", ac1_worked_example);
    ok &= run("AC2 closed-form score checks", ac2_closed_form);
    ok &= run("AC3 numerical stability", ac3_stability);
    ok &= run("AC4 filtering fidelity", ac4_filtering);
    ok &= run("AC5 ROC AUC oracle equivalence", ac5_roc_oracle);
    ok &= run("AC6 HDI oracle equivalence", ac6_hdi_oracle);
    ok &= run("AC7 synthetic grounded vs ungrounded", ac7_synthetic_grounding);
    ok &= run("AC8 synthetic leave-one-out attribution", ac8_synthetic_attribution);
    ok &= run("AC9 prompt template golden test", ac9_prompt_golden);
    match ac10_integration() {
        Some(outcome) => ok &= run("AC10 live-backend integration", || outcome),
        None => println!(
            "SKIP  AC10 live-backend integration: set CONSENS_SCORING_URL and CONSENS_IT_DATASET to run"
        ),
    }
    if !ok {
        std::process::exit(1);
    }
}
