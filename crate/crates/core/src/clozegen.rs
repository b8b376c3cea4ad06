//! Cloze triple construction: introduction sentences are matched against body
//! passages, matched phrase spans become answers, and the answer-bearing
//! sentence becomes the question with the span replaced by a placeholder.

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotate::{AnnotatedSentence, Annotator, PhraseKind, Region, SentenceId};
use crate::corpus::{Document, Passage};
use crate::dataset::CriterionScores;
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClozeConfig {
    pub min_overlap: usize,
    pub placeholder: String,
    pub allowed_kinds: BTreeSet<PhraseKind>,
    pub max_answer_tokens: usize,
    pub per_pair_limit: usize,
    /// Only accept matches that end the introduction sentence (ignoring
    /// trailing punctuation).
    pub suffix_only: bool,
}

impl Default for ClozeConfig {
    fn default() -> Self {
        ClozeConfig {
            min_overlap: 2,
            placeholder: "@placeholder".into(),
            allowed_kinds: PhraseKind::ALL.into_iter().collect(),
            max_answer_tokens: 10,
            per_pair_limit: 1,
            suffix_only: false,
        }
    }
}

impl ClozeConfig {
    pub fn validate(&self) -> Result<(), String> {
        let toks = tokenize(&self.placeholder);
        if toks.len() != 1 || toks[0].text != self.placeholder {
            return Err(format!(
                "placeholder {:?} must be a single token",
                self.placeholder
            ));
        }
        if self.max_answer_tokens == 0 {
            return Err("max_answer_tokens must be at least 1".into());
        }
        if self.per_pair_limit == 0 {
            return Err("per_pair_limit must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    /// Character (Unicode scalar) offset into the passage.
    pub start: usize,
    pub end: usize,
    pub kind: PhraseKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub doc: String,
    /// Introduction sentence ordinal.
    pub q: usize,
    /// Passage ordinal.
    pub p: usize,
}

/// One (passage, question, answer) training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClozeTriple {
    pub id: String,
    pub passage: String,
    pub question: String,
    pub answer: Answer,
    pub prov: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<CriterionScores>,
}

impl ClozeTriple {
    /// The introduction sentence the question was cut from.
    pub fn source_sentence(&self, placeholder: &str) -> String {
        self.question.replacen(placeholder, &self.answer.text, 1)
    }
}

/// A passage phrase span whose surface text occurs in the question sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MatchCandidate {
    /// Sentence index within the passage.
    pub passage_sentence: usize,
    pub answer: crate::annotate::PhraseSpan,
    /// Aligned token range in the introduction sentence.
    pub q_start: usize,
    pub q_end: usize,
}

impl MatchCandidate {
    pub fn len(&self) -> usize {
        self.q_end - self.q_start
    }

    pub fn is_empty(&self) -> bool {
        self.q_end == self.q_start
    }

    fn rank_key(&self) -> (std::cmp::Reverse<usize>, usize, usize, usize, PhraseKind) {
        (
            std::cmp::Reverse(self.len()),
            self.q_start,
            self.passage_sentence,
            self.answer.start,
            self.answer.kind,
        )
    }
}

/// Index one past the last word token of `q`.
fn last_word_end(q: &AnnotatedSentence) -> usize {
    q.tokens
        .iter()
        .rposition(|t| t.is_word())
        .map_or(0, |i| i + 1)
}

/// Every (passage span, occurrence in `q`) pair whose surface strings are
/// identical, ordered longest first, then by position in `q`.
pub fn find_matches(q: &AnnotatedSentence, passage: &[AnnotatedSentence], cfg: &ClozeConfig) -> Vec<MatchCandidate> {
    let mut by_first: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, t) in q.tokens.iter().enumerate() {
        by_first.entry(t.text.as_str()).or_default().push(i);
    }
    let suffix_end = last_word_end(q);
    let mut out = Vec::new();
    for (si, sent) in passage.iter().enumerate() {
        for span in &sent.spans {
            if !cfg.allowed_kinds.contains(&span.kind) || span.len() > cfg.max_answer_tokens || span.is_empty() {
                continue;
            }
            let Some(starts) = by_first.get(sent.tokens[span.start].text.as_str()) else {
                continue;
            };
            let surface = sent.surface(span.start, span.end);
            for &qs in starts {
                let qe = qs + span.len();
                if qe > q.len() || (cfg.suffix_only && qe != suffix_end) {
                    continue;
                }
                if q.surface(qs, qe) == surface {
                    out.push(MatchCandidate {
                        passage_sentence: si,
                        answer: span.clone(),
                        q_start: qs,
                        q_end: qe,
                    });
                }
            }
        }
    }
    out.sort_by_key(MatchCandidate::rank_key);
    out
}

fn cloze_id(doc_id: &str, q_ordinal: usize, p_ordinal: usize, cand: &MatchCandidate) -> String {
    let key = format!(
        "{doc_id}\u{1f}{q_ordinal}\u{1f}{p_ordinal}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}\u{1f}{}",
        cand.passage_sentence, cand.answer.start, cand.answer.end, cand.answer.kind, cand.q_start, cand.q_end
    );
    let digest = Sha256::digest(key.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds the triple for one candidate produced by [`find_matches`].
pub fn make_cloze(
    doc_id: &str,
    q: &AnnotatedSentence,
    q_ordinal: usize,
    passage: &Passage,
    passage_sents: &[AnnotatedSentence],
    cand: &MatchCandidate,
    cfg: &ClozeConfig,
) -> ClozeTriple {
    let qr = q.byte_range(cand.q_start, cand.q_end);
    let question = format!("{}{}{}", &q.text[..qr.start], cfg.placeholder, &q.text[qr.end..]);

    let sent = &passage_sents[cand.passage_sentence];
    let base = passage.sentences[cand.passage_sentence].start;
    let ar = sent.byte_range(cand.answer.start, cand.answer.end);
    let (start, end) = (base + ar.start, base + ar.end);
    let char_start = passage.text[..start].chars().count();
    let text = passage.text[start..end].to_string();
    let char_end = char_start + text.chars().count();

    ClozeTriple {
        id: cloze_id(doc_id, q_ordinal, passage.ordinal, cand),
        passage: passage.text.clone(),
        question,
        answer: Answer {
            text,
            start: char_start,
            end: char_end,
            kind: cand.answer.kind,
        },
        prov: Provenance {
            doc: doc_id.to_string(),
            q: q_ordinal,
            p: passage.ordinal,
        },
        scores: None,
    }
}

/// Distinct content-word types shared by the question (placeholder excluded)
/// and the passage.
pub fn overlap(question: &str, passage: &str, placeholder: &str) -> usize {
    let q: HashSet<String> = tokenize(question)
        .into_iter()
        .filter(|t| t.is_content() && t.text != placeholder)
        .map(|t| t.lower)
        .collect();
    if q.is_empty() {
        return 0;
    }
    let mut seen = HashSet::new();
    tokenize(passage)
        .into_iter()
        .filter(|t| t.is_content() && q.contains(&t.lower) && seen.insert(t.lower.clone()))
        .count()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruneReport {
    pub kept: usize,
    pub dropped: usize,
}

/// Drops triples whose question/passage content overlap is below `min_overlap`.
pub fn prune<I>(triples: I, cfg: &ClozeConfig) -> (Vec<ClozeTriple>, PruneReport)
where
    I: IntoIterator<Item = ClozeTriple>,
{
    let mut report = PruneReport::default();
    let kept: Vec<ClozeTriple> = triples
        .into_iter()
        .filter(|t| {
            let keep = cfg.min_overlap == 0 || overlap(&t.question, &t.passage, &cfg.placeholder) >= cfg.min_overlap;
            if keep {
                report.kept += 1;
            } else {
                report.dropped += 1;
            }
            keep
        })
        .collect();
    (kept, report)
}

/// Annotations for every sentence of a segmented document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub intro: Vec<AnnotatedSentence>,
    /// One entry per passage, one sentence list each.
    pub passages: Vec<Vec<AnnotatedSentence>>,
}

pub fn annotate_document(doc: &Document, annotator: &dyn Annotator) -> AnnotatedDocument {
    let id = |region, ordinal| SentenceId {
        doc_id: doc.doc_id.clone(),
        region,
        ordinal,
    };
    AnnotatedDocument {
        intro: doc
            .intro_sentences
            .iter()
            .map(|s| annotator.annotate(id(Region::Intro, s.ordinal), &s.text))
            .collect(),
        passages: doc
            .passages
            .iter()
            .map(|p| {
                p.sentences
                    .iter()
                    .enumerate()
                    .map(|(i, r)| annotator.annotate(id(Region::Passage(p.ordinal), i), &p.text[r.clone()]))
                    .collect()
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Generated {
    pub triples: Vec<ClozeTriple>,
    pub candidates: usize,
    pub pruned: usize,
    pub duplicates: usize,
}

/// Generates triples for a document whose sentences are already annotated.
pub fn generate_annotated(doc: &Document, ann: &AnnotatedDocument, cfg: &ClozeConfig) -> Generated {
    let mut raw = Vec::new();
    let mut candidates = 0;
    for (qi, q) in ann.intro.iter().enumerate() {
        if q.is_empty() || q.text.contains(&cfg.placeholder) {
            continue;
        }
        for (passage, sents) in doc.passages.iter().zip(&ann.passages) {
            let cands = find_matches(q, sents, cfg);
            candidates += cands.len();
            raw.extend(
                cands
                    .iter()
                    .take(cfg.per_pair_limit)
                    .map(|c| make_cloze(&doc.doc_id, q, doc.intro_sentences[qi].ordinal, passage, sents, c, cfg)),
            );
        }
    }
    let (kept, report) = prune(raw, cfg);
    let mut seen = HashSet::new();
    let before = kept.len();
    let triples: Vec<ClozeTriple> = kept
        .into_iter()
        .filter(|t| seen.insert((t.question.clone(), t.answer.text.clone(), t.prov.p)))
        .collect();
    Generated {
        duplicates: before - triples.len(),
        triples,
        candidates,
        pruned: report.dropped,
    }
}

/// All cloze triples of one document, in (intro sentence, passage, rank) order.
pub fn generate_document(doc: &Document, annotator: &dyn Annotator, cfg: &ClozeConfig) -> Vec<ClozeTriple> {
    generate_annotated(doc, &annotate_document(doc, annotator), cfg).triples
}
