//! Deterministic synthetic datasets over a generated reference corpus.
//!
//! The world is a set of topics, each owning a handful of rare invented
//! content words. The reference corpus mentions every topic word a few times
//! among frequent filler words. Grounded answers reuse the content words of
//! their context document, ungrounded answers borrow words from a topic that
//! is absent from the context, so under the prompt-adapted reference model a
//! grounded answer becomes more likely once the context is shown.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::harness::{AttributionRecord, PairwiseRecord};

const SYLLABLES: &[&str] = &[
    "ka", "lo", "mi", "ne", "ru", "ta", "vo", "zi", "pe", "su", "da", "fo", "gi", "hu", "be", "xo",
];

const FILLERS: &[&str] = &[
    "study", "report", "method", "result", "sample", "group", "effect", "process", "system",
    "value", "level", "change", "measure", "model", "region",
];

const FUNCTION_WORDS: &[&str] = &["the", "a", "of", "and", "in", "with", "is", "was", "to"];

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    topics: Vec<Vec<String>>,
    seed: u64,
}

pub const DEFAULT_TOPICS: usize = 40;
pub const WORDS_PER_TOPIC: usize = 10;

impl SyntheticWorld {
    pub fn new(seed: u64) -> Self {
        Self::with_topics(seed, DEFAULT_TOPICS)
    }

    pub fn with_topics(seed: u64, n_topics: usize) -> Self {
        assert!(n_topics >= 3, "need at least three topics");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen = std::collections::HashSet::new();
        let mut topics = Vec::with_capacity(n_topics);
        for _ in 0..n_topics {
            let mut words = Vec::with_capacity(WORDS_PER_TOPIC);
            while words.len() < WORDS_PER_TOPIC {
                let w: String = (0..3)
                    .map(|_| *SYLLABLES.choose(&mut rng).expect("non-empty"))
                    .collect();
                if seen.insert(w.clone()) {
                    words.push(w);
                }
            }
            topics.push(words);
        }
        Self { topics, seed }
    }

    pub fn topics(&self) -> &[Vec<String>] {
        &self.topics
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn sentence(&self, rng: &mut ChaCha8Rng, content: &[&str]) -> String {
        let mut words: Vec<String> = Vec::new();
        for (i, c) in content.iter().enumerate() {
            if i > 0 {
                words.push(FUNCTION_WORDS.choose(rng).expect("non-empty").to_string());
            }
            words.push(FILLERS.choose(rng).expect("non-empty").to_string());
            words.push(c.to_string());
        }
        let mut s = words.join(" ");
        s.push('.');
        // capitalize the first letter
        let mut chars = s.chars();
        match chars.next() {
            Some(f) => f.to_uppercase().collect::<String>() + chars.as_str(),
            None => s,
        }
    }

    /// Training corpus for the reference model: every topic word appears
    /// twice, interleaved with fillers; one sentence per line.
    pub fn corpus(&self) -> Vec<String> {
        let mut rng = self.rng(1);
        let mut lines = Vec::new();
        for words in &self.topics {
            let mut shuffled: Vec<&str> = words.iter().map(String::as_str).collect();
            for _ in 0..2 {
                shuffled.shuffle(&mut rng);
                for chunk in shuffled.chunks(3) {
                    lines.push(self.sentence(&mut rng, chunk));
                }
            }
        }
        for _ in 0..50 {
            let a = *FILLERS.choose(&mut rng).expect("non-empty");
            let b = *FILLERS.choose(&mut rng).expect("non-empty");
            lines.push(format!("The {a} of the {b} is a {} value.", FILLERS.choose(&mut rng).expect("non-empty")));
        }
        lines
    }

    fn pick_topics(&self, rng: &mut ChaCha8Rng, k: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.topics.len()).collect();
        idx.shuffle(rng);
        idx.truncate(k);
        idx
    }

    fn content(&self, rng: &mut ChaCha8Rng, topic: usize, n: usize) -> Vec<&str> {
        let words: Vec<&str> = self.topics[topic].iter().map(String::as_str).collect();
        words.choose_multiple(rng, n).copied().collect()
    }

    /// Document about `topic`: its key words stated twice plus other words
    /// of the topic.
    fn document(&self, rng: &mut ChaCha8Rng, topic: usize, key: &[&str]) -> String {
        let others = self.content(rng, topic, 3);
        let mut sentences = vec![self.sentence(rng, key), self.sentence(rng, &others)];
        sentences.push(self.sentence(rng, key));
        sentences.join(" ")
    }

    fn question(&self, rng: &mut ChaCha8Rng) -> String {
        let f = FILLERS.choose(rng).expect("non-empty");
        format!("What does the {f} describe?")
    }

    fn answer(&self, rng: &mut ChaCha8Rng, words: &[&str]) -> String {
        let lead = ["It describes", "The text mentions", "They report"]
            .choose(rng)
            .expect("non-empty");
        match words {
            [a, b, c, ..] => format!("{lead} {a} and {b} with {c}."),
            [a, b] => format!("{lead} {a} and {b}."),
            [a] => format!("{lead} {a}."),
            [] => format!("{lead} nothing."),
        }
    }

    /// Grounded (`answer_a`) versus ungrounded (`answer_b`) answers sharing
    /// one context document.
    pub fn pairwise_vary_answer(&self, n: usize) -> Vec<PairwiseRecord> {
        let mut rng = self.rng(2);
        (0..n)
            .map(|i| {
                let t = self.pick_topics(&mut rng, 2);
                let key = self.content(&mut rng, t[0], 3);
                let document = self.document(&mut rng, t[0], &key);
                let foreign = self.content(&mut rng, t[1], 3);
                PairwiseRecord::VaryAnswer {
                    id: format!("va-{i:05}"),
                    question: self.question(&mut rng),
                    documents: vec![document],
                    answer_a: self.answer(&mut rng, &key),
                    answer_b: self.answer(&mut rng, &foreign),
                }
            })
            .collect()
    }

    /// Full (`documents_a`) versus partial (`documents_b`) context: the
    /// partial context loses the sentences carrying the answer's words.
    pub fn pairwise_vary_context(&self, n: usize) -> Vec<PairwiseRecord> {
        let mut rng = self.rng(3);
        (0..n)
            .map(|i| {
                let t = self.pick_topics(&mut rng, 1)[0];
                let mut words = self.content(&mut rng, t, 6);
                words.shuffle(&mut rng);
                let (key, rest) = words.split_at(3);
                let background = [self.sentence(&mut rng, &rest[..2]), self.sentence(&mut rng, &rest[2..])];
                let critical = [self.sentence(&mut rng, key), self.sentence(&mut rng, key)];
                let full = format!("{} {} {} {}", background[0], critical[0], critical[1], background[1]);
                let partial = format!("{} {}", background[0], background[1]);
                PairwiseRecord::VaryContext {
                    id: format!("vc-{i:05}"),
                    question: self.question(&mut rng),
                    answer: self.answer(&mut rng, key),
                    documents_a: vec![full],
                    documents_b: vec![partial],
                }
            })
            .collect()
    }

    /// `k`-document records in which exactly one document carries the
    /// answer's content words.
    pub fn attribution(&self, n: usize, k: usize) -> Vec<AttributionRecord> {
        assert!(k >= 2 && k <= self.topics.len());
        let mut rng = self.rng(4);
        (0..n)
            .map(|i| {
                let topics = self.pick_topics(&mut rng, k);
                let key = self.content(&mut rng, topics[0], 3);
                let correct_doc = self.document(&mut rng, topics[0], &key);
                let mut documents: Vec<String> = topics[1..]
                    .iter()
                    .map(|&t| {
                        let other_key = self.content(&mut rng, t, 3);
                        self.document(&mut rng, t, &other_key)
                    })
                    .collect();
                let correct_doc_index = rng.gen_range(0..k);
                documents.insert(correct_doc_index, correct_doc);
                AttributionRecord {
                    id: format!("at-{i:05}"),
                    question: self.question(&mut rng),
                    answer: self.answer(&mut rng, &key),
                    documents,
                    correct_doc_index,
                }
            })
            .collect()
    }
}
