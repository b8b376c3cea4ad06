//! Question-type labels: wh-word buckets and coarse answer-type classes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WhBucket {
    What,
    Which,
    Where,
    When,
    Who,
    Why,
    How,
    Other,
}

impl WhBucket {
    pub const ALL: [WhBucket; 8] = [
        WhBucket::What,
        WhBucket::Which,
        WhBucket::Where,
        WhBucket::When,
        WhBucket::Who,
        WhBucket::Why,
        WhBucket::How,
        WhBucket::Other,
    ];

    /// Bucket of the first question token, case-folded.
    pub fn of(question: &str) -> Self {
        let first = tokenize(question).into_iter().find(|t| t.is_word());
        match first.as_ref().map(|t| t.lower.as_str()) {
            Some("what") => WhBucket::What,
            Some("which") => WhBucket::Which,
            Some("where") => WhBucket::Where,
            Some("when") => WhBucket::When,
            Some("who") => WhBucket::Who,
            Some("why") => WhBucket::Why,
            Some("how") => WhBucket::How,
            _ => WhBucket::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            WhBucket::What => "what",
            WhBucket::Which => "which",
            WhBucket::Where => "where",
            WhBucket::When => "when",
            WhBucket::Who => "who",
            WhBucket::Why => "why",
            WhBucket::How => "how",
            WhBucket::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Coarse {
    ABBR,
    ENTY,
    DESC,
    HUM,
    LOC,
    NUM,
}

impl Coarse {
    pub const ALL: [Coarse; 6] = [Coarse::ABBR, Coarse::ENTY, Coarse::DESC, Coarse::HUM, Coarse::LOC, Coarse::NUM];

    pub fn as_str(self) -> &'static str {
        match self {
            Coarse::ABBR => "ABBR",
            Coarse::ENTY => "ENTY",
            Coarse::DESC => "DESC",
            Coarse::HUM => "HUM",
            Coarse::LOC => "LOC",
            Coarse::NUM => "NUM",
        }
    }
}

impl fmt::Display for Coarse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Coarse {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Coarse::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown coarse label {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionTypeLabel {
    pub wh_bucket: WhBucket,
    pub coarse: Coarse,
}

const NUM_CUES: &[&str] = &[
    "year", "years", "date", "day", "century", "percent", "percentage", "number", "population",
    "age", "cost", "price", "temperature", "distance", "speed", "size", "height", "length",
    "weight", "amount", "many", "much", "long", "old", "far", "big", "large", "tall", "often",
    "fast", "deep", "wide", "high",
];
const HUM_CUES: &[&str] = &[
    "person", "man", "woman", "president", "king", "queen", "author", "writer", "inventor",
    "founder", "actor", "actress", "singer", "scientist", "leader", "player", "team", "company",
    "organization", "group", "emperor", "painter", "composer", "name",
];
const LOC_CUES: &[&str] = &[
    "city", "country", "state", "continent", "river", "mountain", "island", "capital", "region",
    "province", "ocean", "sea", "lake", "place", "town", "located", "county", "planet",
];

fn has_any(words: &[String], cues: &[&str]) -> bool {
    words.iter().any(|w| cues.contains(&w.as_str()))
}

/// Deterministic wh-word and keyword rules.
pub fn classify_rules(question: &str) -> Coarse {
    let words: Vec<String> = tokenize(question)
        .into_iter()
        .filter(|t| t.is_word())
        .map(|t| t.lower)
        .collect();
    let text = words.join(" ");
    if text.contains("stand for") || text.contains("short for") || has_any(&words, &["abbreviation", "acronym", "abbreviated"]) {
        return Coarse::ABBR;
    }
    let second = words.get(1).map(String::as_str);
    match WhBucket::of(question) {
        WhBucket::Who => Coarse::HUM,
        WhBucket::Where => Coarse::LOC,
        WhBucket::When => Coarse::NUM,
        WhBucket::Why => Coarse::DESC,
        WhBucket::How => match second {
            Some("many" | "much" | "long" | "old" | "far" | "big" | "large" | "tall" | "often" | "fast" | "deep" | "wide" | "high") => {
                Coarse::NUM
            }
            _ => Coarse::DESC,
        },
        WhBucket::What | WhBucket::Which | WhBucket::Other => {
            let head = &words[..words.len().min(4)];
            if has_any(head, NUM_CUES) {
                Coarse::NUM
            } else if has_any(head, HUM_CUES) {
                Coarse::HUM
            } else if has_any(head, LOC_CUES) {
                Coarse::LOC
            } else if matches!(second, Some("is" | "are" | "was" | "were" | "does" | "do")) && words.len() <= 5 {
                // short copular "what is X" asks for a definition
                Coarse::DESC
            } else {
                Coarse::ENTY
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum QtypeError {
    #[error("trained question classifier requires a model file; train one with `clozeforge train-qtype` or use rules mode")]
    MissingModel,
    #[error("cannot read model {path}: {message}")]
    BadModel { path: String, message: String },
    #[error("line {line}: expected `LABEL:fine question`, got {text:?}")]
    BadTrecLine { line: usize, text: String },
    #[error("no training examples")]
    NoExamples,
}

/// Parses TREC question-classification lines: `COARSE:fine question text`.
pub fn parse_trec(data: &str) -> Result<Vec<(Coarse, String)>, QtypeError> {
    let mut out = Vec::new();
    for (i, line) in data.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = || QtypeError::BadTrecLine {
            line: i + 1,
            text: line.to_string(),
        };
        let (label, rest) = line.split_once(' ').ok_or_else(bad)?;
        let coarse = label.split(':').next().unwrap_or_default();
        let coarse = coarse.parse().map_err(|_| bad())?;
        out.push((coarse, rest.trim().to_string()));
    }
    Ok(out)
}

fn bow_features(question: &str) -> Vec<String> {
    let words: Vec<String> = tokenize(question)
        .into_iter()
        .filter(|t| t.is_word())
        .map(|t| t.lower)
        .collect();
    let mut feats: Vec<String> = words.iter().map(|w| format!("w={w}")).collect();
    if let Some(first) = words.first() {
        feats.push(format!("first={first}"));
    }
    if words.len() >= 2 {
        feats.push(format!("first2={} {}", words[0], words[1]));
    }
    feats.push("bias".into());
    feats.sort();
    feats.dedup();
    feats
}

/// Multinomial logistic regression over bag-of-words features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearQuestionClassifier {
    pub labels: Vec<Coarse>,
    /// feature -> one weight per label
    pub weights: BTreeMap<String, Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 30,
            learning_rate: 0.5,
            l2: 1e-4,
            seed: 13,
        }
    }
}

impl LinearQuestionClassifier {
    pub fn train(examples: &[(Coarse, String)], opts: TrainOptions) -> Result<Self, QtypeError> {
        if examples.is_empty() {
            return Err(QtypeError::NoExamples);
        }
        let labels = Coarse::ALL.to_vec();
        let k = labels.len();
        let data: Vec<(usize, Vec<String>)> = examples
            .iter()
            .map(|(c, q)| (labels.iter().position(|l| l == c).unwrap_or(0), bow_features(q)))
            .collect();
        let mut weights: HashMap<String, Vec<f64>> = HashMap::new();
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for epoch in 0..opts.epochs {
            order.shuffle(&mut rng);
            let lr = opts.learning_rate / (1.0 + epoch as f64 * 0.1);
            for &i in &order {
                let (y, feats) = &data[i];
                let probs = softmax(&scores(&weights, feats, k));
                for f in feats {
                    let w = weights.entry(f.clone()).or_insert_with(|| vec![0.0; k]);
                    for (c, wc) in w.iter_mut().enumerate() {
                        let target = if c == *y { 1.0 } else { 0.0 };
                        *wc -= lr * ((probs[c] - target) + opts.l2 * *wc);
                    }
                }
            }
        }
        Ok(LinearQuestionClassifier {
            labels,
            weights: weights.into_iter().collect(),
        })
    }

    pub fn classify(&self, question: &str) -> Coarse {
        let feats = bow_features(question);
        let mut s = vec![0.0; self.labels.len()];
        for f in &feats {
            if let Some(w) = self.weights.get(f) {
                for (acc, wc) in s.iter_mut().zip(w) {
                    *acc += wc;
                }
            }
        }
        let best = s
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map_or(0, |(i, _)| i);
        self.labels[best]
    }

    pub fn load(path: &Path) -> Result<Self, QtypeError> {
        let bad = |message: String| QtypeError::BadModel {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
    }
}

fn scores(weights: &HashMap<String, Vec<f64>>, feats: &[String], k: usize) -> Vec<f64> {
    let mut s = vec![0.0; k];
    for f in feats {
        if let Some(w) = weights.get(f) {
            for (acc, wc) in s.iter_mut().zip(w) {
                *acc += wc;
            }
        }
    }
    s
}

fn softmax(s: &[f64]) -> Vec<f64> {
    let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = s.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / z).collect()
}

pub enum CoarseModel<'a> {
    Rules,
    Trained(Option<&'a LinearQuestionClassifier>),
}

pub fn classify_coarse(question: &str, model: &CoarseModel<'_>) -> Result<Coarse, QtypeError> {
    match model {
        CoarseModel::Rules => Ok(classify_rules(question)),
        CoarseModel::Trained(Some(m)) => Ok(m.classify(question)),
        CoarseModel::Trained(None) => Err(QtypeError::MissingModel),
    }
}

pub fn label_question(question: &str, model: &CoarseModel<'_>) -> Result<QuestionTypeLabel, QtypeError> {
    Ok(QuestionTypeLabel {
        wh_bucket: WhBucket::of(question),
        coarse: classify_coarse(question, model)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_lookups() {
        assert_eq!(classify_rules("Who founded the Red Cross?"), Coarse::HUM);
        assert_eq!(classify_rules("How many moons does Mars have?"), Coarse::NUM);
        assert_eq!(classify_rules("Where is the Louvre?"), Coarse::LOC);
        assert_eq!(classify_rules("What does NASA stand for?"), Coarse::ABBR);
        assert_eq!(classify_rules("Why is the sky blue?"), Coarse::DESC);
        assert_eq!(classify_rules("What year did the war end?"), Coarse::NUM);
        assert_eq!(classify_rules("What is autism?"), Coarse::DESC);
        assert_eq!(classify_rules("What instrument did he play in the band?"), Coarse::ENTY);
    }

    #[test]
    fn wh_buckets() {
        assert_eq!(WhBucket::of("WHEN did it start?"), WhBucket::When);
        assert_eq!(WhBucket::of("In which year?"), WhBucket::Other);
        assert_eq!(WhBucket::of(""), WhBucket::Other);
    }

    #[test]
    fn trained_mode_requires_model() {
        assert!(matches!(
            classify_coarse("Who?", &CoarseModel::Trained(None)),
            Err(QtypeError::MissingModel)
        ));
    }

    #[test]
    fn trec_parsing() {
        let ex = parse_trec("NUM:date When did it happen ?\nHUM:ind Who wrote it ?\n").unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0], (Coarse::NUM, "When did it happen ?".to_string()));
        assert!(parse_trec("garbage").is_err());
        assert!(parse_trec("FOO:bar what ?").is_err());
    }

    #[test]
    fn classifier_fits_separable_data() {
        let ex = parse_trec(
            "HUM:ind Who wrote Hamlet ?\nHUM:ind Who painted it ?\nLOC:city Where is Rome ?\nLOC:other Where is Peru ?\nNUM:count How many legs ?\nNUM:count How many cats ?",
        )
        .unwrap();
        let m = LinearQuestionClassifier::train(&ex, TrainOptions::default()).unwrap();
        for (c, q) in &ex {
            assert_eq!(m.classify(q), *c);
        }
    }
}
