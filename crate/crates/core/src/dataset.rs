//! Subset scoring, selection, jsonl export/import and corpus statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clozegen::ClozeTriple;
use crate::text::{content_types, jaccard, tokenize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionScores {
    /// Jaccard similarity of the answer-bearing sentence and the passage.
    pub jaccard: f64,
    /// Summed tf-idf weight of the answer's word types within the passage.
    pub tfidf: f64,
    /// Answer length in tokens.
    pub ans_len: usize,
}

/// Document frequencies of case-folded word types over a set of passages.
#[derive(Debug, Clone, Default)]
pub struct IdfIndex {
    passages: usize,
    df: HashMap<String, usize>,
}

fn word_types(text: &str) -> BTreeSet<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| t.is_word())
        .map(|t| t.lower)
        .collect()
}

impl IdfIndex {
    pub fn build<'a, I>(passages: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut index = IdfIndex::default();
        for p in passages {
            index.add(p);
        }
        index
    }

    pub fn add(&mut self, passage: &str) {
        self.passages += 1;
        for w in word_types(passage) {
            *self.df.entry(w).or_insert(0) += 1;
        }
    }

    pub fn passage_count(&self) -> usize {
        self.passages
    }

    /// `ln(1 + N / df)`; unseen terms count as occurring in one passage.
    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(1).max(1);
        (1.0 + self.passages as f64 / df as f64).ln()
    }
}

pub fn score_triple(t: &ClozeTriple, index: &IdfIndex, placeholder: &str) -> CriterionScores {
    let sentence = t.source_sentence(placeholder);
    let jac = jaccard(&content_types(&sentence), &content_types(&t.passage));

    let mut tf: HashMap<String, usize> = HashMap::new();
    for tok in tokenize(&t.passage).into_iter().filter(|t| t.is_word()) {
        *tf.entry(tok.lower).or_insert(0) += 1;
    }
    let tfidf = word_types(&t.answer.text)
        .iter()
        .map(|w| tf.get(w).copied().unwrap_or(0) as f64 * index.idf(w))
        .sum();

    CriterionScores {
        jaccard: jac,
        tfidf,
        ans_len: tokenize(&t.answer.text).len().max(1),
    }
}

/// Fills the scores of every triple.
pub fn score(triples: &mut [ClozeTriple], index: &IdfIndex, placeholder: &str) {
    triples
        .par_iter_mut()
        .for_each(|t| t.scores = Some(score_triple(t, index, placeholder)));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Jaccard,
    Tfidf,
    AnsLen,
    None,
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jaccard" => Ok(Criterion::Jaccard),
            "tfidf" => Ok(Criterion::Tfidf),
            "ans_len" => Ok(Criterion::AnsLen),
            "none" => Ok(Criterion::None),
            other => Err(format!("unknown criterion {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    Ascending,
    Descending,
}

impl Criterion {
    /// Shorter answers rank first; the other criteria rank high scores first.
    pub fn default_order(self) -> SortOrder {
        match self {
            Criterion::AnsLen => SortOrder::Ascending,
            _ => SortOrder::Descending,
        }
    }

    pub fn value(self, s: &CriterionScores) -> f64 {
        match self {
            Criterion::Jaccard => s.jaccard,
            Criterion::Tfidf => s.tfidf,
            Criterion::AnsLen => s.ans_len as f64,
            Criterion::None => 0.0,
        }
    }
}

/// How many triples to keep: an absolute count or a fraction of the input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopK {
    Count(i64),
    Fraction(f64),
}

impl TopK {
    pub fn resolve(self, total: usize) -> usize {
        match self {
            TopK::Count(n) => n.clamp(0, total as i64) as usize,
            TopK::Fraction(f) if f > 0.0 => ((f * total as f64 - 1e-9).ceil() as usize).min(total),
            TopK::Fraction(_) => 0,
        }
    }
}

impl FromStr for TopK {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains('.') || s.contains('e') {
            s.parse().map(TopK::Fraction).map_err(|e| format!("bad top-k {s:?}: {e}"))
        } else {
            s.parse().map(TopK::Count).map_err(|e| format!("bad top-k {s:?}: {e}"))
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error("triple {0} has no scores; score the dataset before selecting")]
    Unscored(String),
}

/// Top `top_k` triples by `criterion`; ties are broken by ascending cloze id.
/// `Criterion::None` keeps everything in input order.
pub fn select_subset(
    triples: &[ClozeTriple],
    criterion: Criterion,
    top_k: TopK,
    order: Option<SortOrder>,
) -> Result<Vec<ClozeTriple>, SelectError> {
    if criterion == Criterion::None {
        return Ok(triples.to_vec());
    }
    let mut keyed = Vec::with_capacity(triples.len());
    for t in triples {
        let s = t.scores.as_ref().ok_or_else(|| SelectError::Unscored(t.id.clone()))?;
        keyed.push((criterion.value(s), t));
    }
    let order = order.unwrap_or(criterion.default_order());
    keyed.sort_by(|(va, a), (vb, b)| {
        let primary = match order {
            SortOrder::Ascending => va.total_cmp(vb),
            SortOrder::Descending => vb.total_cmp(va),
        };
        primary.then_with(|| a.id.cmp(&b.id))
    });
    let k = top_k.resolve(triples.len());
    Ok(keyed.into_iter().take(k).map(|(_, t)| t.clone()).collect())
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("integrity error: manifest {manifest} records {expected} triples but {found} were read")]
    CountMismatch {
        manifest: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("cannot encode manifest: {0}")]
    Encode(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// 10th..90th percentiles (nearest rank).
    pub deciles: Vec<f64>,
}

impl Distribution {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let deciles = (1..10)
            .map(|d| {
                let rank = (d * n).div_ceil(10).max(1);
                v[rank - 1]
            })
            .collect();
        Some(Distribution {
            min: v[0],
            max: v[n - 1],
            mean: v.iter().sum::<f64>() / n as f64,
            deciles,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub corpus_hash: String,
    pub config: serde_json::Value,
    pub triple_count: usize,
    pub distributions: BTreeMap<String, Distribution>,
    pub created_unix: u64,
}

/// Sidecar manifest path: `dir/name.jsonl` -> `dir/name.manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.manifest.json"))
}

fn distributions(triples: &[ClozeTriple]) -> BTreeMap<String, Distribution> {
    let scores: Vec<&CriterionScores> = triples.iter().filter_map(|t| t.scores.as_ref()).collect();
    let mut out = BTreeMap::new();
    if scores.len() != triples.len() {
        return out;
    }
    for c in [Criterion::Jaccard, Criterion::Tfidf, Criterion::AnsLen] {
        let values: Vec<f64> = scores.iter().map(|s| c.value(s)).collect();
        if let Some(d) = Distribution::of(&values) {
            let name = serde_json::to_value(c).ok().and_then(|v| v.as_str().map(String::from));
            out.insert(name.unwrap_or_default(), d);
        }
    }
    out
}

fn now_unix() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
        return epoch;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Serializes triples in cloze-id order, one JSON object per line.
pub fn write_jsonl<W: Write>(triples: &[ClozeTriple], mut out: W) -> std::io::Result<()> {
    let mut sorted: Vec<&ClozeTriple> = triples.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    for t in sorted {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Writes the dataset and its sidecar manifest.
pub fn export(
    triples: &[ClozeTriple],
    path: &Path,
    corpus_hash: &str,
    config: serde_json::Value,
) -> Result<DatasetManifest, DatasetError> {
    let io = |p: &Path| {
        let p = p.to_path_buf();
        move |source| DatasetError::Io { path: p, source }
    };
    let file = File::create(path).map_err(io(path))?;
    write_jsonl(triples, BufWriter::new(file)).map_err(io(path))?;

    let manifest = DatasetManifest {
        corpus_hash: corpus_hash.to_string(),
        config,
        triple_count: triples.len(),
        distributions: distributions(triples),
        created_unix: now_unix(),
    };
    let mpath = manifest_path(path);
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    std::fs::write(&mpath, body).map_err(io(&mpath))?;
    Ok(manifest)
}

/// Reads a dataset, checking the triple count against its manifest.
pub fn import(path: &Path) -> Result<(Vec<ClozeTriple>, DatasetManifest), DatasetError> {
    let mpath = manifest_path(path);
    let manifest_text = std::fs::read_to_string(&mpath).map_err(|source| DatasetError::Io {
        path: mpath.clone(),
        source,
    })?;
    let manifest: DatasetManifest =
        serde_json::from_str(&manifest_text).map_err(|source| DatasetError::Parse {
            path: mpath.clone(),
            line: 1,
            source,
        })?;
    let triples = read_jsonl(path)?;
    if triples.len() != manifest.triple_count {
        return Err(DatasetError::CountMismatch {
            manifest: mpath,
            expected: manifest.triple_count,
            found: triples.len(),
        });
    }
    Ok((triples, manifest))
}

/// Reads a cloze jsonl file without a manifest check.
pub fn read_jsonl(path: &Path) -> Result<Vec<ClozeTriple>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| DatasetError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// Bin edges, one more than the number of bins.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn of(values: &[f64], bins: usize) -> Option<Self> {
        let dist = Distribution::of(values)?;
        let (lo, hi) = (dist.min, dist.max);
        let bins = if hi > lo { bins.max(1) } else { 1 };
        let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        Some(Histogram { edges, counts })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub triples: usize,
    pub documents: usize,
    pub kinds: BTreeMap<String, usize>,
    pub histograms: BTreeMap<String, Histogram>,
    pub samples: Vec<ClozeTriple>,
    pub seed: u64,
}

/// Counts, score histograms, answer-kind distribution and a seeded uniform
/// sample of `sample_n` triples for manual answerability audit.
pub fn stats(triples: &[ClozeTriple], sample_n: usize, seed: u64) -> StatsReport {
    let mut kinds = BTreeMap::new();
    for t in triples {
        *kinds.entry(t.answer.kind.to_string()).or_insert(0) += 1;
    }
    let documents = triples.iter().map(|t| t.prov.doc.as_str()).collect::<BTreeSet<_>>().len();
    let mut histograms = BTreeMap::new();
    let scored: Vec<&CriterionScores> = triples.iter().filter_map(|t| t.scores.as_ref()).collect();
    for (name, c, bins) in [
        ("jaccard", Criterion::Jaccard, 10),
        ("tfidf", Criterion::Tfidf, 10),
        ("ans_len", Criterion::AnsLen, 10),
    ] {
        let values: Vec<f64> = scored.iter().map(|s| c.value(s)).collect();
        if let Some(h) = Histogram::of(&values, bins) {
            histograms.insert(name.to_string(), h);
        }
    }
    StatsReport {
        triples: triples.len(),
        documents,
        kinds,
        histograms,
        samples: sample_triples(triples, sample_n, seed),
        seed,
    }
}

/// Seeded uniform sample without replacement, kept in input order.
pub fn sample_triples(triples: &[ClozeTriple], n: usize, seed: u64) -> Vec<ClozeTriple> {
    let n = n.min(triples.len());
    if n == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, triples.len(), n).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| triples[i].clone()).collect()
}

impl StatsReport {
    /// Plain-text rendering, with audit sheets for the sampled triples.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "triples    {}", self.triples);
        let _ = writeln!(out, "documents  {}", self.documents);
        let _ = writeln!(out, "\nanswer kinds");
        for (k, n) in &self.kinds {
            let _ = writeln!(out, "  {k:<5} {n:>8}");
        }
        for (name, h) in &self.histograms {
            let _ = writeln!(out, "\n{name}");
            for (i, c) in h.counts.iter().enumerate() {
                let _ = writeln!(out, "  [{:>9.4}, {:>9.4}) {:>8}", h.edges[i], h.edges[i + 1], c);
            }
        }
        if !self.samples.is_empty() {
            out.push('\n');
            out.push_str(&audit_sheet(&self.samples, self.seed));
        }
        out
    }
}

/// Printable sheet for judging by hand whether each sampled question is
/// answerable from its passage.
pub fn audit_sheet(samples: &[ClozeTriple], seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "audit sample (seed {seed}, n = {})", samples.len());
    for (i, t) in samples.iter().enumerate() {
        let _ = writeln!(out, "\n--- {} / {} [{}]", i + 1, samples.len(), t.id);
        let _ = writeln!(out, "P: {}", t.passage);
        let _ = writeln!(out, "Q: {}", t.question);
        let _ = writeln!(out, "A: {} ({})", t.answer.text, t.answer.kind);
        let _ = writeln!(out, "answerable from passage? [ ] yes  [ ] no");
    }
    out
}
