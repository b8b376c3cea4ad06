//! Post-hoc analyses of two QA systems: regression of per-question F1 on
//! question features, and F1 gains bucketed by question type.

pub mod features;
pub mod gains;
pub mod ols;
pub mod qtype;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{span_f1, AnswerValue};
use crate::text::SentenceSplitter;

pub use features::{extract_features, FeatureVector, TokenCounts, FEATURE_NAMES};
pub use gains::{type_gains, BucketGain, GainTable, QuestionGain};
pub use ols::{ols_fit, standardize, OlsError, OlsFit, Standardization};
pub use qtype::{classify_coarse, Coarse, CoarseModel, QuestionTypeLabel, WhBucket};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    YCloze,
    YSl,
    YDiff,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::YCloze, Target::YSl, Target::YDiff];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub target: Target,
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub r2: f64,
    pub n: usize,
    /// Constant features left out of the design.
    pub dropped: Vec<String>,
    pub standardization: Standardization,
}

/// Z-scores the feature columns (intercept at index 0 is left alone), drops
/// constant ones, and fits OLS.
pub fn regress(target: Target, names: &[&str], rows: &[Vec<f64>], y: &[f64]) -> Result<RegressionFit, OlsError> {
    let mut z = rows.to_vec();
    let standardization = standardize(&mut z, &[0]);
    let keep: Vec<usize> = (0..names.len())
        .filter(|&j| j == 0 || standardization.sds[j] > 0.0)
        .collect();
    let dropped: Vec<String> = (0..names.len())
        .filter(|j| !keep.contains(j))
        .map(|j| names[j].to_string())
        .collect();
    if !dropped.is_empty() {
        warn!("dropping constant features from regression: {}", dropped.join(", "));
    }
    let kept_names: Vec<String> = keep.iter().map(|&j| names[j].to_string()).collect();
    let design: Vec<Vec<f64>> = z.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect();
    let fit = ols_fit(&kept_names, &design, y)?;
    Ok(RegressionFit {
        target,
        names: fit.names,
        coefficients: fit.coefficients,
        std_errors: fit.std_errors,
        r2: fit.r2,
        n: fit.n,
        dropped,
        standardization,
    })
}

/// One evaluated question: text, passage and gold answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub qid: String,
    pub question: String,
    pub passage: String,
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("qid {qid:?} missing from {source_name}")]
    MissingQid { qid: String, source_name: &'static str },
    #[error(transparent)]
    Ols(#[from] OlsError),
    #[error(transparent)]
    Qtype(#[from] qtype::QtypeError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub regressions: Vec<RegressionFit>,
    pub gains: GainTable,
}

pub struct AnalysisInputs<'a> {
    pub questions: &'a [QuestionRecord],
    pub golds: &'a BTreeMap<String, AnswerValue>,
    pub pred_cloze: &'a BTreeMap<String, AnswerValue>,
    pub pred_sl: &'a BTreeMap<String, AnswerValue>,
    /// Training-corpus counts; when absent they are computed from the passages.
    pub counts: Option<&'a TokenCounts>,
}

/// Per-question F1 for both systems, feature regressions for the three
/// targets, and question-type gain buckets.
pub fn analyze(inputs: &AnalysisInputs<'_>, model: &CoarseModel<'_>, seed: u64) -> Result<AnalysisReport, AnalysisError> {
    let fallback;
    let counts = match inputs.counts {
        Some(c) => c,
        None => {
            warn!("no training-corpus counts given; rarity features use the evaluation passages");
            fallback = TokenCounts::from_texts(inputs.questions.iter().map(|q| q.passage.as_str()));
            &fallback
        }
    };
    let splitter = SentenceSplitter::default();
    let lookup = |map: &BTreeMap<String, AnswerValue>, qid: &str, source_name| {
        map.get(qid).cloned().ok_or_else(|| AnalysisError::MissingQid {
            qid: qid.to_string(),
            source_name,
        })
    };

    let mut rows = Vec::with_capacity(inputs.questions.len());
    let mut per_question = Vec::with_capacity(inputs.questions.len());
    for q in inputs.questions {
        let gold = lookup(inputs.golds, &q.qid, "gold")?.strings();
        let f1_cloze = span_f1(&lookup(inputs.pred_cloze, &q.qid, "cloze predictions")?.top(), &gold);
        let f1_sl = span_f1(&lookup(inputs.pred_sl, &q.qid, "sl predictions")?.top(), &gold);
        let answer = gold.first().map(String::as_str).unwrap_or("");
        rows.push(extract_features(&q.question, &q.passage, answer, counts, &splitter).to_row());
        per_question.push(QuestionGain {
            qid: q.qid.clone(),
            f1_cloze,
            f1_sl,
            label: qtype::label_question(&q.question, model)?,
        });
    }

    let mut regressions = Vec::new();
    for target in Target::ALL {
        let y: Vec<f64> = per_question
            .iter()
            .map(|g| match target {
                Target::YCloze => g.f1_cloze,
                Target::YSl => g.f1_sl,
                Target::YDiff => g.gain(),
            })
            .collect();
        regressions.push(regress(target, &FEATURE_NAMES, &rows, &y)?);
    }
    Ok(AnalysisReport {
        n: per_question.len(),
        regressions,
        gains: type_gains(&per_question, seed),
    })
}

impl AnalysisReport {
    /// Aligned text table of coefficients and standard errors per target.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<28} {:>12} {:>12} {:>12}", "feature", "y_cloze", "y_sl", "y_diff");
        let names: Vec<&String> = self.regressions.first().map(|r| r.names.iter().collect()).unwrap_or_default();
        for name in names {
            let mut line = format!("{name:<28}");
            for r in &self.regressions {
                match r.names.iter().position(|n| n == name) {
                    Some(j) => {
                        let _ = write!(line, " {:>12}", format!("{:+.4}±{:.4}", r.coefficients[j], r.std_errors[j]));
                    }
                    None => line.push_str(&format!(" {:>12}", "-")),
                }
            }
            let _ = writeln!(out, "{line}");
        }
        let mut r2 = format!("{:<28}", "r2");
        for r in &self.regressions {
            let _ = write!(r2, " {:>12.4}", r.r2);
        }
        let _ = writeln!(out, "{r2}");
        let _ = writeln!(out, "{:<28} {:>12}", "n", self.n);
        out
    }
}
