use std::collections::BTreeSet;

use consens::provider::{render_prompt, train_reference_lm, ReferenceLm, PROMPT_TEMPLATE};
use consens::scorer::score_prompts;
use consens::textproc::{filter_words, segment_words};
use consens::{
    attribute_documents, score_example, FilterConfig, QaExample, ScoreError, ScoringProvider,
    ScoringRequest,
};
use proptest::prelude::*;

const CORPUS: &[&str] = &[
    "the river flows past the old mill near the village",
    "a farmer grows wheat and barley in the green valley",
    "scientists study proteins and enzymes in the laboratory",
    "the market sells bread cheese and apples every morning",
    "sailors navigate the ocean using stars and compasses",
    "the orchestra played violins cellos and flutes tonight",
    "engineers build bridges tunnels and railways across mountains",
];

fn lm() -> ReferenceLm {
    train_reference_lm(CORPUS, 1.0).unwrap()
}

fn vocab_word() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec![
        "river", "mill", "wheat", "barley", "proteins", "enzymes", "bread", "cheese", "ocean",
        "stars", "violins", "flutes", "bridges", "tunnels", "the", "and", "zebra",
    ])
}

#[test]
fn reference_scoring_is_deterministic() {
    let m = lm();
    let req = ScoringRequest::new("Context: proteins", "They study proteins and enzymes.");
    let a = m.score_answer(&req).unwrap();
    let b = m.score_answer(&req).unwrap();
    let bits = |v: &[consens::TokenScore]| v.iter().map(|t| t.logprob.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a, b);
}

proptest! {
    #[test]
    fn prompt_mentions_never_lower_a_word(
        prompt in prop::collection::vec(vocab_word(), 0..12),
        answer in prop::collection::vec(vocab_word(), 1..6),
        pick in any::<prop::sample::Index>(),
    ) {
        let m = lm();
        let answer = answer.join(" ");
        let units: Vec<String> = segment_words(&answer).into_iter().map(|u| u.text).collect();
        let w = &units[pick.index(units.len())];
        let base_prompt = prompt.join(" ");
        let more = format!("{base_prompt} {w}");
        let before = m.score_answer(&ScoringRequest::new(base_prompt, answer.clone())).unwrap();
        let after = m.score_answer(&ScoringRequest::new(more, answer.clone())).unwrap();
        for (i, u) in units.iter().enumerate() {
            if u == w {
                prop_assert!(after[i].logprob >= before[i].logprob);
            }
        }
    }

    #[test]
    fn rendered_length_is_exact(context in ".{0,40}", question in "[a-z?]{1,20}") {
        let p = render_prompt(&context, &question).unwrap();
        let expected = PROMPT_TEMPLATE.len() - "{{context}}".len() - "{{question}}".len()
            + context.len() + question.len();
        prop_assert_eq!(p.len(), expected);
    }
}

#[test]
fn swapping_conditions_negates_the_score() {
    let m = lm();
    let filter = FilterConfig::default();
    let q = "What do scientists study?";
    let answer = "They study proteins and enzymes in mills.";
    let with = render_prompt("Scientists study proteins and enzymes.", q).unwrap();
    let without = render_prompt("", q).unwrap();
    let fwd = score_prompts(q, answer, &without, &with, &m, &filter).unwrap();
    let rev = score_prompts(q, answer, &with, &without, &m, &filter).unwrap();
    assert!(fwd.score > 0.0);
    assert_eq!(fwd.score, -rev.score);
    assert_eq!(fwd.r, -rev.r);
}

#[test]
fn word_details_follow_the_filter() {
    let m = lm();
    let filter = FilterConfig::default();
    let ex = QaExample::new(
        "x",
        "What grows in the valley?",
        vec!["A farmer grows wheat and barley.".into(), "The river flows.".into()],
        "The farmer grows wheat, barley and apples.",
    );
    let r = score_example(&ex, &m, &filter).unwrap();
    let detail_words: Vec<&str> = r.word_details.iter().map(|w| w.word.as_str()).collect();
    let retained: Vec<String> = filter_words(&segment_words(&ex.answer), &ex.question, &filter)
        .into_iter()
        .filter(|w| w.status.is_retained())
        .map(|w| w.text)
        .collect();
    assert_eq!(detail_words, retained);
    assert_eq!(detail_words, ["farmer", "wheat", "barley", "apples"]);
    assert_eq!(r.log_p_empty.token_count, r.log_p_context.token_count);
    // each word is one token under the reference model
    assert_eq!(r.log_p_empty.token_count, 4);
    let expected_r = r.log_p_empty.value - r.log_p_context.value;
    assert_eq!(r.r, expected_r);
}

#[test]
fn irrelevant_context_barely_moves_the_score() {
    let m = lm();
    let filter = FilterConfig::default();
    let q = "What do sailors use?";
    let context = "The orchestra played violins and flutes.";
    let ex = QaExample::new("x", q, vec![context.into()], "Sailors use stars and compasses.");
    let r = score_example(&ex, &m, &filter).unwrap();

    // Context words only enlarge each row's denominator, by K_ctx on top of
    // K_tmpl + alpha * (V + 1), so r >= -ln(1 + K_ctx / (K_tmpl + alpha * (V + 1))).
    let k_tmpl = segment_words(&render_prompt("", q).unwrap()).len() as f64;
    let k_ctx = segment_words(&render_prompt(context, q).unwrap()).len() as f64 - k_tmpl;
    let outcomes = m.vocabulary_size() as f64 + 1.0;
    let bound = (1.0 + k_ctx / (k_tmpl + m.smoothing_alpha() * outcomes)).ln();
    assert!(r.r <= 0.0);
    assert!(-r.r <= bound + 1e-12, "r = {} bound = {bound}", r.r);
    assert!(r.score.abs() < 0.1, "{}", r.score);
}

#[test]
fn relevant_context_raises_the_score() {
    let m = lm();
    let ex = QaExample::new(
        "x",
        "What do sailors use?",
        vec!["Sailors navigate using stars and compasses.".into()],
        "Sailors use stars and compasses.",
    );
    let r = score_example(&ex, &m, &FilterConfig::default()).unwrap();
    assert!(r.score > 0.0);
    assert!(r.log_p_context.value < r.log_p_empty.value);
}

fn three_docs() -> QaExample {
    QaExample::new(
        "a",
        "What do engineers build?",
        vec![
            "The river flows past the old mill.".into(),
            "The market sells bread and cheese.".into(),
            "Engineers build bridges tunnels and railways.".into(),
        ],
        "Engineers build bridges, tunnels and railways.",
    )
}

#[test]
fn attribution_finds_the_supporting_document() {
    let r = attribute_documents(&three_docs(), &lm(), &FilterConfig::default(), false).unwrap();
    assert_eq!(r.most_influential_index, 2);
    let idx: BTreeSet<usize> = r.per_document_scores.iter().map(|d| d.document_index).collect();
    assert_eq!(idx, (0..3).collect());
    assert!(r.full_context_score.is_none());
}

#[test]
fn attribution_with_two_documents() {
    let mut ex = three_docs();
    ex.documents.remove(1);
    let r = attribute_documents(&ex, &lm(), &FilterConfig::default(), true).unwrap();
    assert_eq!(r.most_influential_index, 1);
    let full = r.full_context_score.unwrap();
    assert!(full.score > r.per_document_scores[1].result.score);
}

#[test]
fn identical_documents_tie_to_first() {
    let mut ex = three_docs();
    ex.documents = vec![ex.documents[2].clone(); 3];
    let r = attribute_documents(&ex, &lm(), &FilterConfig::default(), false).unwrap();
    let s0 = r.per_document_scores[0].result.score;
    assert!(r.per_document_scores.iter().all(|d| d.result.score == s0));
    assert_eq!(r.most_influential_index, 0);
}

#[test]
fn attribution_needs_two_documents() {
    let mut ex = three_docs();
    ex.documents.truncate(1);
    assert_eq!(
        attribute_documents(&ex, &lm(), &FilterConfig::default(), false).unwrap_err(),
        ScoreError::EmptyContext
    );
}

#[test]
fn concurrent_scoring_matches_sequential() {
    let m = lm();
    let filter = FilterConfig::default();
    let examples: Vec<QaExample> = (0..16)
        .map(|i| {
            let mut ex = three_docs();
            ex.id = i.to_string();
            ex.documents.rotate_left(i % 3);
            ex
        })
        .collect();
    let sequential: Vec<f64> = examples
        .iter()
        .map(|e| score_example(e, &m, &filter).unwrap().score)
        .collect();
    let parallel: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = examples
            .iter()
            .map(|e| s.spawn(|| score_example(e, &m, &filter).unwrap().score))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert_eq!(sequential, parallel);
}
