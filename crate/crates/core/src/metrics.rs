//! Answer normalization and scoring: span F1 / exact match in the style of the
//! SQuAD evaluation script, mean reciprocal rank, and list F1.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

static ARTICLES: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(a|an|the)\b").unwrap());

/// Lowercase, drop ASCII punctuation, drop the articles a/an/the, collapse
/// whitespace.
pub fn normalize(answer: &str) -> String {
    let lower = answer.to_lowercase();
    let no_punct: String = lower.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    let no_articles = ARTICLES.replace_all(&no_punct, " ");
    no_articles.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn token_f1(pred: &str, gold: &str) -> f64 {
    let p = normalize(pred);
    let g = normalize(gold);
    let pt: Vec<&str> = p.split_whitespace().collect();
    let gt: Vec<&str> = g.split_whitespace().collect();
    if pt.is_empty() || gt.is_empty() {
        return f64::from(u8::from(pt == gt));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &gt {
        *counts.entry(t).or_insert(0) += 1;
    }
    let mut common = 0usize;
    for t in &pt {
        if let Some(c) = counts.get_mut(t) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pt.len() as f64;
    let recall = common as f64 / gt.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Best token-level F1 of `pred` against any gold answer.
pub fn span_f1<S: AsRef<str>>(pred: &str, golds: &[S]) -> f64 {
    golds
        .iter()
        .map(|g| token_f1(pred, g.as_ref()))
        .fold(0.0, f64::max)
}

/// 1.0 when the normalized prediction equals some normalized gold answer.
pub fn exact_match<S: AsRef<str>>(pred: &str, golds: &[S]) -> f64 {
    let p = normalize(pred);
    f64::from(u8::from(golds.iter().any(|g| normalize(g.as_ref()) == p)))
}

/// Reciprocal rank of the first correct candidate, 0 when none is correct.
pub fn reciprocal_rank<S: AsRef<str>, G: AsRef<str>>(ranked: &[S], golds: &[G]) -> f64 {
    let gold: BTreeSet<String> = golds.iter().map(|g| normalize(g.as_ref())).collect();
    ranked
        .iter()
        .position(|c| gold.contains(&normalize(c.as_ref())))
        .map_or(0.0, |i| 1.0 / (i + 1) as f64)
}

/// Mean reciprocal rank over questions; 0 for an empty set.
pub fn mrr<S: AsRef<str>, G: AsRef<str>>(questions: &[(Vec<S>, Vec<G>)]) -> f64 {
    if questions.is_empty() {
        return 0.0;
    }
    questions
        .iter()
        .map(|(ranked, gold)| reciprocal_rank(ranked, gold))
        .sum::<f64>()
        / questions.len() as f64
}

/// Set-level F1 between normalized predicted and gold items.
pub fn list_f1<S: AsRef<str>, G: AsRef<str>>(pred: &[S], gold: &[G]) -> f64 {
    let p: BTreeSet<String> = pred.iter().map(|s| normalize(s.as_ref())).collect();
    let g: BTreeSet<String> = gold.iter().map(|s| normalize(s.as_ref())).collect();
    let common = p.intersection(&g).count();
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / p.len() as f64;
    let recall = common as f64 / g.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalScore {
    pub f1: f64,
    pub em: f64,
    pub n: usize,
}

/// Mean span F1 and EM over `(prediction, golds)` pairs.
pub fn evaluate_spans<S: AsRef<str>>(pairs: &[(String, Vec<S>)]) -> EvalScore {
    let n = pairs.len();
    if n == 0 {
        return EvalScore { f1: 0.0, em: 0.0, n };
    }
    let (f1, em) = pairs.iter().fold((0.0, 0.0), |(f, e), (p, g)| {
        (f + span_f1(p, g), e + exact_match(p, g))
    });
    EvalScore {
        f1: f1 / n as f64,
        em: em / n as f64,
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Span,
    Factoid,
    List,
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "span" => Ok(Task::Span),
            "factoid" => Ok(Task::Factoid),
            "list" => Ok(Task::List),
            other => Err(format!("unknown task {other:?}; expected span, factoid or list")),
        }
    }
}

/// Value of a prediction or gold record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnswerValue {
    Text(String),
    Ranked(Vec<String>),
    Set { set: Vec<String> },
}

impl AnswerValue {
    /// Every string carried by the value, in order.
    pub fn strings(&self) -> Vec<String> {
        match self {
            AnswerValue::Text(s) => vec![s.clone()],
            AnswerValue::Ranked(v) | AnswerValue::Set { set: v } => v.clone(),
        }
    }

    /// The single prediction string: the text itself, or the top-ranked item.
    pub fn top(&self) -> String {
        match self {
            AnswerValue::Text(s) => s.clone(),
            AnswerValue::Ranked(v) | AnswerValue::Set { set: v } => v.first().cloned().unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub qid: String,
    #[serde(alias = "gold", alias = "answers")]
    pub pred: AnswerValue,
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("gold file is empty")]
    EmptyGold,
    #[error("duplicate qid {0:?}")]
    DuplicateQid(String),
    #[error("predictions missing for {} gold qids: {}", .0.len(), .0.join(", "))]
    MissingPredictions(Vec<String>),
    #[error("predictions for {} qids not in gold: {}", .0.len(), .0.join(", "))]
    UnknownPredictions(Vec<String>),
}

/// Parses a prediction or gold jsonl stream keyed by qid.
pub fn read_answers<R: BufRead>(reader: R) -> Result<BTreeMap<String, AnswerValue>, EvalError> {
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AnswerRecord =
            serde_json::from_str(&line).map_err(|source| EvalError::Parse { line: i + 1, source })?;
        if out.insert(rec.qid.clone(), rec.pred).is_some() {
            return Err(EvalError::DuplicateQid(rec.qid));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mrr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub list_f1: Option<f64>,
}

fn check_ids(
    preds: &BTreeMap<String, AnswerValue>,
    golds: &BTreeMap<String, AnswerValue>,
) -> Result<(), EvalError> {
    if golds.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let missing: Vec<String> = golds.keys().filter(|k| !preds.contains_key(*k)).cloned().collect();
    if !missing.is_empty() {
        return Err(EvalError::MissingPredictions(missing));
    }
    let unknown: Vec<String> = preds.keys().filter(|k| !golds.contains_key(*k)).cloned().collect();
    if !unknown.is_empty() {
        return Err(EvalError::UnknownPredictions(unknown));
    }
    Ok(())
}

/// Scores aligned prediction and gold maps for `task`.
pub fn evaluate(
    task: Task,
    preds: &BTreeMap<String, AnswerValue>,
    golds: &BTreeMap<String, AnswerValue>,
) -> Result<EvalReport, EvalError> {
    check_ids(preds, golds)?;
    let n = golds.len();
    let mut report = EvalReport {
        task,
        n,
        f1: None,
        em: None,
        mrr: None,
        list_f1: None,
    };
    match task {
        Task::Span => {
            let pairs: Vec<(String, Vec<String>)> = golds
                .iter()
                .map(|(qid, g)| (preds[qid].top(), g.strings()))
                .collect();
            let s = evaluate_spans(&pairs);
            report.f1 = Some(s.f1);
            report.em = Some(s.em);
        }
        Task::Factoid => {
            let qs: Vec<(Vec<String>, Vec<String>)> = golds
                .iter()
                .map(|(qid, g)| (preds[qid].strings(), g.strings()))
                .collect();
            report.mrr = Some(mrr(&qs));
        }
        Task::List => {
            let total: f64 = golds
                .iter()
                .map(|(qid, g)| list_f1(&preds[qid].strings(), &g.strings()))
                .sum();
            report.list_f1 = Some(total / n as f64);
        }
    }
    Ok(report)
}
