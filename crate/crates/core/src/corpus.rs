//! Document model, corpus ingestion and introduction/body segmentation.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::ops::Range;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::text::SentenceSplitter;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus at {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusFormat {
    Jsonl,
    PlainTextDir,
}

/// One input record before segmentation. Text fields are already normalized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub id: String,
    pub title: String,
    pub text: String,
    pub intro: Option<String>,
    pub meta: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedRecord {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct Ingested {
    pub documents: Vec<RawDocument>,
    pub skipped: Vec<SkippedRecord>,
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: String,
    text: String,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    intro: Option<String>,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_json::Value>,
}

/// NFC, then whitespace collapsed to single spaces within each paragraph.
/// Paragraphs (blank-line separated blocks) are rejoined with `"\n\n"`.
pub fn normalize_text(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    let mut paragraphs: Vec<String> = Vec::new();
    let mut current = String::new();
    for line in nfc.lines() {
        if line.trim().is_empty() {
            if !current.is_empty() {
                paragraphs.push(std::mem::take(&mut current));
            }
            continue;
        }
        for word in line.split_whitespace() {
            if !current.is_empty() {
                current.push(' ');
            }
            current.push_str(word);
        }
    }
    if !current.is_empty() {
        paragraphs.push(current);
    }
    paragraphs.join("\n\n")
}

fn parse_record(line: &str) -> Result<RawDocument, String> {
    let rec: JsonlRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let text = normalize_text(&rec.text);
    if text.is_empty() {
        return Err("empty text".into());
    }
    let meta = rec
        .extra
        .into_iter()
        .filter_map(|(k, v)| match v {
            serde_json::Value::String(s) => Some((k, s)),
            _ => None,
        })
        .collect();
    Ok(RawDocument {
        id: rec.id,
        title: rec.title.map(|t| normalize_text(&t)).unwrap_or_default(),
        text,
        intro: rec
            .intro
            .map(|i| normalize_text(&i))
            .filter(|i| !i.is_empty()),
        meta,
    })
}

/// Reads jsonl records from `reader`. Blank lines are ignored; malformed
/// records are reported with their 1-based line number and skipped.
pub fn read_jsonl<R: BufRead>(reader: R) -> std::io::Result<Ingested> {
    let mut out = Ingested::default();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line) {
            Ok(doc) => out.documents.push(doc),
            Err(reason) => {
                warn!("skipping record on line {}: {}", idx + 1, reason);
                out.skipped.push(SkippedRecord {
                    line: idx + 1,
                    reason,
                });
            }
        }
    }
    Ok(out)
}

fn read_text_dir(dir: &Path) -> std::io::Result<Ingested> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut out = Ingested::default();
    for (idx, path) in paths.iter().enumerate() {
        let id = path
            .file_name()
            .map(|n| n.to_string_lossy())
            .map(|n| n.strip_suffix(".txt").unwrap_or(&n).to_string())
            .unwrap_or_default();
        let text = match fs::read_to_string(path) {
            Ok(t) => normalize_text(&t),
            Err(e) => {
                warn!("skipping {}: {}", path.display(), e);
                out.skipped.push(SkippedRecord {
                    line: idx + 1,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if text.is_empty() {
            out.skipped.push(SkippedRecord {
                line: idx + 1,
                reason: "empty text".into(),
            });
            continue;
        }
        out.documents.push(RawDocument {
            id,
            title: String::new(),
            text,
            intro: None,
            meta: BTreeMap::new(),
        });
    }
    Ok(out)
}

/// Loads every document of a corpus in input order.
pub fn ingest_corpus(path: &Path, format: CorpusFormat) -> Result<Ingested, CorpusError> {
    let unreadable = |source| CorpusError::Unreadable {
        path: path.to_path_buf(),
        source,
    };
    match format {
        CorpusFormat::Jsonl => {
            let file = File::open(path).map_err(unreadable)?;
            read_jsonl(BufReader::new(file)).map_err(unreadable)
        }
        CorpusFormat::PlainTextDir => read_text_dir(path).map_err(unreadable),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarkerMode {
    /// Use the record's `intro` field when present, else fall back to the fraction rule.
    ExplicitSectionMarker,
    /// Always take the first `ceil(K * S)` sentences.
    FractionOfSentences,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub intro_fraction: f64,
    pub marker_mode: MarkerMode,
    pub min_intro_sentences: usize,
    /// Sentences per passage when the body has no paragraph breaks.
    pub window: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            intro_fraction: 0.20,
            marker_mode: MarkerMode::ExplicitSectionMarker,
            min_intro_sentences: 1,
            window: 5,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.intro_fraction > 0.0 && self.intro_fraction <= 1.0) {
            return Err(format!(
                "intro fraction must lie in (0, 1], got {}",
                self.intro_fraction
            ));
        }
        if self.min_intro_sentences == 0 {
            return Err("min_intro_sentences must be at least 1".into());
        }
        if self.window == 0 {
            return Err("passage window must be at least 1".into());
        }
        Ok(())
    }

    /// Introduction size for a document of `sentences` sentences.
    pub fn intro_len(&self, sentences: usize) -> usize {
        // K is a decimal fraction; the epsilon keeps 0.2 * 15 from ceiling to 4
        let n = (self.intro_fraction * sentences as f64 - 1e-9).ceil().max(0.0) as usize;
        n.max(self.min_intro_sentences)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentError {
    #[error("document {0} has fewer than 2 sentences")]
    TooFewSentences(String),
    #[error("document {0} has an empty introduction")]
    EmptyIntro(String),
    #[error("document {0} has no body text after the introduction")]
    EmptyBody(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRef {
    pub ordinal: usize,
    /// Byte range into [`Document::text`].
    pub span: Range<usize>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub ordinal: usize,
    pub text: String,
    /// Byte range into [`Document::text`].
    pub span: Range<usize>,
    /// Sentence byte ranges relative to `text`.
    pub sentences: Vec<Range<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    /// Normalized document text. In explicit mode this is the introduction,
    /// a paragraph break, then the body.
    pub text: String,
    pub intro_sentences: Vec<SentenceRef>,
    pub passages: Vec<Passage>,
    pub source_meta: BTreeMap<String, String>,
}

impl Document {
    /// Rebuilds the normalized text from the recorded regions. Gaps between
    /// regions must be pure whitespace, which is checked here.
    pub fn reconstruct(&self) -> Option<String> {
        let mut regions: Vec<(&Range<usize>, &str)> = self
            .intro_sentences
            .iter()
            .map(|s| (&s.span, s.text.as_str()))
            .chain(self.passages.iter().map(|p| (&p.span, p.text.as_str())))
            .collect();
        regions.sort_by_key(|(r, _)| r.start);
        let mut out = String::with_capacity(self.text.len());
        let mut cursor = 0;
        for (range, text) in regions {
            let gap = self.text.get(cursor..range.start)?;
            if !gap.chars().all(char::is_whitespace) {
                return None;
            }
            out.push_str(gap);
            out.push_str(text);
            cursor = range.end;
        }
        let tail = self.text.get(cursor..)?;
        if !tail.chars().all(char::is_whitespace) {
            return None;
        }
        out.push_str(tail);
        Some(out)
    }
}

/// A sentence located in the document: paragraph index and byte range.
struct Located {
    paragraph: usize,
    span: Range<usize>,
}

fn locate_sentences(text: &str, base: usize, splitter: &SentenceSplitter) -> Vec<Located> {
    let mut out = Vec::new();
    let mut offset = 0;
    for (paragraph, para) in text.split("\n\n").enumerate() {
        for r in splitter.spans(para) {
            out.push(Located {
                paragraph,
                span: base + offset + r.start..base + offset + r.end,
            });
        }
        offset += para.len() + 2;
    }
    out
}

fn group_passages(text: &str, body: &[Located], window: usize) -> Vec<Passage> {
    let multi_paragraph = body
        .first()
        .is_some_and(|f| body.iter().any(|s| s.paragraph != f.paragraph));
    let mut groups: Vec<&[Located]> = Vec::new();
    if multi_paragraph {
        let mut start = 0;
        for i in 1..=body.len() {
            if i == body.len() || body[i].paragraph != body[start].paragraph {
                groups.push(&body[start..i]);
                start = i;
            }
        }
    } else {
        groups.extend(body.chunks(window));
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(ordinal, sents)| {
            let start = sents[0].span.start;
            let end = sents[sents.len() - 1].span.end;
            Passage {
                ordinal,
                text: text[start..end].to_string(),
                span: start..end,
                sentences: sents
                    .iter()
                    .map(|s| s.span.start - start..s.span.end - start)
                    .collect(),
            }
        })
        .collect()
}

fn sentence_refs(text: &str, sents: &[Located]) -> Vec<SentenceRef> {
    sents
        .iter()
        .enumerate()
        .map(|(ordinal, s)| SentenceRef {
            ordinal,
            span: s.span.clone(),
            text: text[s.span.clone()].to_string(),
        })
        .collect()
}

/// Partitions a document into introduction sentences and body passages.
pub fn segment(
    doc: &RawDocument,
    cfg: &SegmentationConfig,
    splitter: &SentenceSplitter,
) -> Result<Document, SegmentError> {
    let explicit = cfg.marker_mode == MarkerMode::ExplicitSectionMarker;
    let (text, intro, body) = match (&doc.intro, explicit) {
        (Some(intro), true) => {
            let text = format!("{}\n\n{}", intro, doc.text);
            let intro_sents = locate_sentences(intro, 0, splitter);
            let body_sents = locate_sentences(&doc.text, intro.len() + 2, splitter);
            if intro_sents.is_empty() {
                return Err(SegmentError::EmptyIntro(doc.id.clone()));
            }
            if body_sents.is_empty() {
                return Err(SegmentError::EmptyBody(doc.id.clone()));
            }
            (text, intro_sents, body_sents)
        }
        _ => {
            let mut sents = locate_sentences(&doc.text, 0, splitter);
            if sents.len() < 2 {
                return Err(SegmentError::TooFewSentences(doc.id.clone()));
            }
            let n = cfg.intro_len(sents.len());
            if n >= sents.len() {
                return Err(SegmentError::EmptyBody(doc.id.clone()));
            }
            let body = sents.split_off(n);
            (doc.text.clone(), sents, body)
        }
    };
    Ok(Document {
        doc_id: doc.id.clone(),
        title: doc.title.clone(),
        intro_sentences: sentence_refs(&text, &intro),
        passages: group_passages(&text, &body, cfg.window),
        text,
        source_meta: doc.meta.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(text: &str) -> RawDocument {
        RawDocument {
            id: "d".into(),
            title: String::new(),
            text: normalize_text(text),
            intro: None,
            meta: BTreeMap::new(),
        }
    }

    fn sentences(n: usize) -> String {
        (0..n).map(|i| format!("Sentence number {i} ends here.")).collect::<Vec<_>>().join(" ")
    }

    #[test]
    fn ten_sentences_give_two_intro_sentences() {
        let doc = segment(&raw(&sentences(10)), &SegmentationConfig::default(), &SentenceSplitter::default()).unwrap();
        assert_eq!(doc.intro_sentences.len(), 2);
        let body: usize = doc.passages.iter().map(|p| p.sentences.len()).sum();
        assert_eq!(body, 8);
        // single paragraph: windows of 5
        assert_eq!(doc.passages.len(), 2);
        assert_eq!(doc.passages[0].sentences.len(), 5);
    }

    #[test]
    fn explicit_intro_takes_precedence() {
        let mut d = raw(&sentences(10));
        d.intro = Some("An explicit intro. It has two sentences.".into());
        let doc = segment(&d, &SegmentationConfig::default(), &SentenceSplitter::default()).unwrap();
        assert_eq!(doc.intro_sentences.len(), 2);
        assert_eq!(doc.intro_sentences[0].text, "An explicit intro.");
        let body: usize = doc.passages.iter().map(|p| p.sentences.len()).sum();
        assert_eq!(body, 10);
        assert_eq!(doc.reconstruct().unwrap(), doc.text);

        let cfg = SegmentationConfig {
            marker_mode: MarkerMode::FractionOfSentences,
            ..Default::default()
        };
        let doc = segment(&d, &cfg, &SentenceSplitter::default()).unwrap();
        assert_eq!(doc.intro_sentences[0].text, "Sentence number 0 ends here.");
    }

    #[test]
    fn single_sentence_document_is_skipped() {
        let err = segment(&raw("Only one sentence here."), &SegmentationConfig::default(), &SentenceSplitter::default());
        assert_eq!(err, Err(SegmentError::TooFewSentences("d".into())));
    }

    #[test]
    fn ceil_keeps_intro_nonempty() {
        let cfg = SegmentationConfig::default();
        assert_eq!(cfg.intro_len(3), 1);
        assert_eq!(cfg.intro_len(10), 2);
        assert_eq!(cfg.intro_len(15), 3);
        assert_eq!(cfg.intro_len(11), 3);
    }

    #[test]
    fn full_fraction_leaves_no_body() {
        let cfg = SegmentationConfig {
            intro_fraction: 1.0,
            ..Default::default()
        };
        let err = segment(&raw(&sentences(4)), &cfg, &SentenceSplitter::default());
        assert_eq!(err, Err(SegmentError::EmptyBody("d".into())));
    }

    #[test]
    fn invalid_fraction_rejected() {
        for k in [0.0, -0.1, 1.5, f64::NAN] {
            let cfg = SegmentationConfig {
                intro_fraction: k,
                ..Default::default()
            };
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn normalization_collapses_whitespace_but_keeps_paragraphs() {
        let s = normalize_text("  A  b\tc\nd \n\n\n  e\u{0301}  f \n");
        assert_eq!(s, "A b c d\n\n\u{e9} f");
    }

    #[test]
    fn jsonl_reader_counts_malformed_lines() {
        let input = "{\"id\":\"a\",\"text\":\"One. Two.\"}\nnot json\n\n{\"id\":\"b\",\"text\":\"x\",\"title\":\"T\",\"src\":\"wiki\"}\n";
        let got = read_jsonl(input.as_bytes()).unwrap();
        assert_eq!(got.documents.len(), 2);
        assert_eq!(got.skipped.len(), 1);
        assert_eq!(got.skipped[0].line, 2);
        assert_eq!(got.documents[1].meta["src"], "wiki");
        assert_eq!(got.documents[1].title, "T");
    }
}
