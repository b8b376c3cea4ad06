//! Per-question features for regressing answer quality on question properties.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::text::{content_types, jaccard, tokenize, SentenceSplitter, Token};

/// Case-folded token counts from a training corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenCounts(pub HashMap<String, u64>);

impl TokenCounts {
    pub fn from_texts<'a, I: IntoIterator<Item = &'a str>>(texts: I) -> Self {
        let mut counts = HashMap::new();
        for t in texts {
            for tok in tokenize(t).into_iter().filter(Token::is_word) {
                *counts.entry(tok.lower).or_insert(0) += 1;
            }
        }
        TokenCounts(counts)
    }

    pub fn get(&self, token: &str) -> u64 {
        self.0.get(token).copied().unwrap_or(0)
    }
}

pub const FEATURE_NAMES: [&str; 8] = [
    "intercept",
    "overlap_q_answer_sentence",
    "overlap_q_passage",
    "answer_len",
    "question_len",
    "passage_len",
    "q_rarity",
    "p_rarity",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub overlap_q_answer_sentence: f64,
    pub overlap_q_passage: f64,
    pub answer_len: f64,
    pub question_len: f64,
    pub passage_len: f64,
    pub q_rarity: f64,
    pub p_rarity: f64,
}

impl FeatureVector {
    /// Values in [`FEATURE_NAMES`] order, intercept first.
    pub fn to_row(&self) -> Vec<f64> {
        vec![
            1.0,
            self.overlap_q_answer_sentence,
            self.overlap_q_passage,
            self.answer_len,
            self.question_len,
            self.passage_len,
            self.q_rarity,
            self.p_rarity,
        ]
    }
}

fn word_count(text: &str) -> f64 {
    tokenize(text).iter().filter(|t| t.is_word()).count().max(1) as f64
}

/// Mean of `1 / (1 + count)` over the content tokens of `text`; 1 when there are none.
fn rarity(text: &str, counts: &TokenCounts) -> f64 {
    let toks: Vec<Token> = tokenize(text).into_iter().filter(Token::is_content).collect();
    if toks.is_empty() {
        return 1.0;
    }
    toks.iter()
        .map(|t| 1.0 / (1.0 + counts.get(&t.lower) as f64))
        .sum::<f64>()
        / toks.len() as f64
}

/// The passage sentence containing the gold answer. Falls back to a
/// case-insensitive search, then to the sentence sharing the most answer
/// content types.
pub fn answer_sentence<'a>(passage: &'a str, answer: &str, splitter: &SentenceSplitter) -> &'a str {
    let spans = splitter.spans(passage);
    if spans.is_empty() {
        return passage;
    }
    let containing = |pos: usize| spans.iter().find(|r| r.start <= pos && pos < r.end.max(r.start + 1));
    if !answer.is_empty() {
        if let Some(r) = passage.find(answer).and_then(containing) {
            return &passage[r.clone()];
        }
        let lower = passage.to_lowercase();
        if lower.len() == passage.len() {
            if let Some(r) = lower.find(&answer.to_lowercase()).and_then(containing) {
                return &passage[r.clone()];
            }
        }
    }
    let answer_types = content_types(answer);
    let best = spans
        .iter()
        .enumerate()
        .max_by_key(|(i, r)| {
            let shared = content_types(&passage[(*r).clone()]).intersection(&answer_types).count();
            // earliest sentence wins ties
            (shared, std::cmp::Reverse(*i))
        })
        .map(|(_, r)| r.clone())
        .unwrap_or(0..passage.len());
    &passage[best]
}

pub fn extract_features(
    question: &str,
    passage: &str,
    answer: &str,
    counts: &TokenCounts,
    splitter: &SentenceSplitter,
) -> FeatureVector {
    let q_types: BTreeSet<String> = content_types(question);
    let sentence = answer_sentence(passage, answer, splitter);
    FeatureVector {
        overlap_q_answer_sentence: jaccard(&q_types, &content_types(sentence)),
        overlap_q_passage: jaccard(&q_types, &content_types(passage)),
        answer_len: word_count(answer),
        question_len: word_count(question),
        passage_len: word_count(passage),
        q_rarity: rarity(question, counts),
        p_rarity: rarity(passage, counts),
    }
}
