//! Quadratic brute-force cloze generator. Enumerates every token window of
//! every introduction sentence against every passage phrase span with nested
//! loops and no indexing, and re-derives questions, answers and the overlap
//! filter on its own.

use std::collections::BTreeSet;

use clozeforge::annotate::PhraseKind;
use clozeforge::clozegen::{AnnotatedDocument, ClozeConfig, ClozeTriple};
use clozeforge::corpus::Document;
use clozeforge::text::tokenize;

/// Everything about a triple except its id.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TripleKey {
    pub question: String,
    pub passage: String,
    pub answer: String,
    pub start: usize,
    pub end: usize,
    pub kind: PhraseKind,
    pub doc: String,
    pub q: usize,
    pub p: usize,
}

pub fn key(t: &ClozeTriple) -> TripleKey {
    TripleKey {
        question: t.question.clone(),
        passage: t.passage.clone(),
        answer: t.answer.text.clone(),
        start: t.answer.start,
        end: t.answer.end,
        kind: t.answer.kind,
        doc: t.prov.doc.clone(),
        q: t.prov.q,
        p: t.prov.p,
    }
}

fn content_set(text: &str, exclude: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for t in tokenize(text) {
        if t.text == exclude || t.is_stopword || !t.text.chars().any(char::is_alphanumeric) {
            continue;
        }
        out.insert(t.text.to_lowercase());
    }
    out
}

pub fn shared_content(question: &str, passage: &str, placeholder: &str) -> usize {
    let q = content_set(question, placeholder);
    let p = content_set(passage, placeholder);
    q.iter().filter(|w| p.contains(*w)).count()
}

pub fn brute_force(doc: &Document, ann: &AnnotatedDocument, cfg: &ClozeConfig) -> Vec<TripleKey> {
    let mut out: Vec<TripleKey> = Vec::new();
    for (qi, q) in ann.intro.iter().enumerate() {
        if q.tokens.is_empty() || q.text.contains(cfg.placeholder.as_str()) {
            continue;
        }
        let mut last_word = 0;
        for (i, t) in q.tokens.iter().enumerate() {
            if t.text.chars().any(char::is_alphanumeric) {
                last_word = i + 1;
            }
        }
        for (pj, passage) in doc.passages.iter().enumerate() {
            // (len, q start, sentence, span start, kind, q end, span end)
            let mut cands = Vec::new();
            for a in 0..q.tokens.len() {
                for b in a + 1..=q.tokens.len() {
                    let q_surface = &q.text[q.tokens[a].start..q.tokens[b - 1].end];
                    for (si, sent) in ann.passages[pj].iter().enumerate() {
                        for span in &sent.spans {
                            if span.end - span.start != b - a
                                || span.end - span.start > cfg.max_answer_tokens
                                || !cfg.allowed_kinds.contains(&span.kind)
                                || (cfg.suffix_only && b != last_word)
                            {
                                continue;
                            }
                            let p_surface = &sent.text[sent.tokens[span.start].start..sent.tokens[span.end - 1].end];
                            if p_surface == q_surface {
                                cands.push((b - a, a, si, span.start, span.kind, b, span.end));
                            }
                        }
                    }
                }
            }
            cands.sort_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2, x.3, x.4).cmp(&(y.1, y.2, y.3, y.4))));
            for &(_, a, si, ss, kind, b, se) in cands.iter().take(cfg.per_pair_limit) {
                let mut question = String::new();
                question.push_str(&q.text[..q.tokens[a].start]);
                question.push_str(&cfg.placeholder);
                question.push_str(&q.text[q.tokens[b - 1].end..]);
                let sent = &ann.passages[pj][si];
                let base = passage.sentences[si].start;
                let byte_start = base + sent.tokens[ss].start;
                let byte_end = base + sent.tokens[se - 1].end;
                let answer = passage.text[byte_start..byte_end].to_string();
                let start = passage.text[..byte_start].chars().count();
                out.push(TripleKey {
                    end: start + answer.chars().count(),
                    start,
                    answer,
                    passage: passage.text.clone(),
                    question,
                    kind,
                    doc: doc.doc_id.clone(),
                    q: doc.intro_sentences[qi].ordinal,
                    p: passage.ordinal,
                });
            }
        }
    }
    let mut kept: Vec<TripleKey> = Vec::new();
    for t in out {
        if cfg.min_overlap > 0 && shared_content(&t.question, &t.passage, &cfg.placeholder) < cfg.min_overlap {
            continue;
        }
        if kept.iter().any(|k| k.question == t.question && k.answer == t.answer && k.p == t.p) {
            continue;
        }
        kept.push(t);
    }
    kept
}

/// Checks the four per-triple invariants; returns a description of the first
/// violation.
pub fn check_invariants(t: &ClozeTriple, doc: &Document, cfg: &ClozeConfig) -> Result<(), String> {
    let count = t.question.matches(cfg.placeholder.as_str()).count();
    if count != 1 {
        return Err(format!("{}: placeholder occurs {count} times", t.id));
    }
    let sliced: String = t.passage.chars().skip(t.answer.start).take(t.answer.end - t.answer.start).collect();
    if sliced != t.answer.text {
        return Err(format!("{}: answer {:?} not at offsets (found {:?})", t.id, t.answer.text, sliced));
    }
    let source = &doc.intro_sentences[t.prov.q].text;
    if t.question.replacen(cfg.placeholder.as_str(), &t.answer.text, 1) != *source {
        return Err(format!("{}: question does not reconstruct {:?}", t.id, source));
    }
    let shared = shared_content(&t.question, &t.passage, &cfg.placeholder);
    if shared < cfg.min_overlap {
        return Err(format!("{}: overlap {shared} < {}", t.id, cfg.min_overlap));
    }
    Ok(())
}
