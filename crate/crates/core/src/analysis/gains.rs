//! Mean F1 gain of one system over another, bucketed by question type.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::qtype::{Coarse, QuestionTypeLabel, WhBucket};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionGain {
    pub qid: String,
    pub f1_cloze: f64,
    pub f1_sl: f64,
    pub label: QuestionTypeLabel,
}

impl QuestionGain {
    pub fn gain(&self) -> f64 {
        self.f1_cloze - self.f1_sl
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketGain {
    /// `wh` or `coarse`.
    pub axis: String,
    pub bucket: String,
    pub n: usize,
    pub mean_gain: Option<f64>,
    /// Percentile bootstrap 95% interval of the mean.
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTable {
    pub overall: BucketGain,
    pub buckets: Vec<BucketGain>,
}

fn bucket(axis: &str, name: &str, gains: &[f64], rng: &mut ChaCha8Rng) -> BucketGain {
    let n = gains.len();
    if n == 0 {
        return BucketGain {
            axis: axis.into(),
            bucket: name.into(),
            n,
            mean_gain: None,
            ci_low: None,
            ci_high: None,
        };
    }
    let mean = gains.iter().sum::<f64>() / n as f64;
    let mut means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..n).map(|_| gains[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * BOOTSTRAP_RESAMPLES as f64).floor() as usize).min(BOOTSTRAP_RESAMPLES - 1)];
    BucketGain {
        axis: axis.into(),
        bucket: name.into(),
        n,
        mean_gain: Some(mean),
        ci_low: Some(at(0.025)),
        ci_high: Some(at(0.975)),
    }
}

/// Per-bucket mean gains along both label axes. Every bucket is listed, empty
/// ones with `n = 0` and no interval. Resampling is seeded by `seed`.
pub fn type_gains(questions: &[QuestionGain], seed: u64) -> GainTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all: Vec<f64> = questions.iter().map(QuestionGain::gain).collect();
    let overall = bucket("all", "all", &all, &mut rng);
    let mut buckets = Vec::new();
    for wh in WhBucket::ALL {
        let g: Vec<f64> = questions
            .iter()
            .filter(|q| q.label.wh_bucket == wh)
            .map(QuestionGain::gain)
            .collect();
        buckets.push(bucket("wh", wh.as_str(), &g, &mut rng));
    }
    for c in Coarse::ALL {
        let g: Vec<f64> = questions
            .iter()
            .filter(|q| q.label.coarse == c)
            .map(QuestionGain::gain)
            .collect();
        buckets.push(bucket("coarse", c.as_str(), &g, &mut rng));
    }
    GainTable { overall, buckets }
}

impl GainTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,bucket,n,mean_gain,ci_low,ci_high\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for b in std::iter::once(&self.overall).chain(&self.buckets) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                b.axis,
                b.bucket,
                b.n,
                opt(b.mean_gain),
                opt(b.ci_low),
                opt(b.ci_high)
            );
        }
        out
    }
}
