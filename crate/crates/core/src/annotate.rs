//! Phrase and named-entity annotation.
//!
//! The builtin annotator is a deterministic rule chunker. Tool-backed
//! annotators (CoreNLP, BANNER, ...) attach through a line-delimited JSON
//! protocol spoken over a child process' stdin/stdout.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{LazyLock, Mutex};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{tokenize, Token};

const GAZETTEER_V1: &str = include_str!("../data/gazetteer-v1.tsv");

/// Longest run a non-stopword chunk may have.
pub const MAX_CHUNK_TOKENS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PhraseKind {
    NP,
    VP,
    ADJP,
    NE,
}

impl PhraseKind {
    pub const ALL: [PhraseKind; 4] = [PhraseKind::NP, PhraseKind::VP, PhraseKind::ADJP, PhraseKind::NE];

    pub fn as_str(self) -> &'static str {
        match self {
            PhraseKind::NP => "NP",
            PhraseKind::VP => "VP",
            PhraseKind::ADJP => "ADJP",
            PhraseKind::NE => "NE",
        }
    }
}

impl fmt::Display for PhraseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhraseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "NP" => Ok(PhraseKind::NP),
            "VP" => Ok(PhraseKind::VP),
            "ADJP" => Ok(PhraseKind::ADJP),
            "NE" => Ok(PhraseKind::NE),
            other => Err(format!("unknown phrase kind {other:?}")),
        }
    }
}

/// Half-open token range `[start, end)` within one sentence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PhraseSpan {
    pub start: usize,
    pub end: usize,
    pub kind: PhraseKind,
    pub label: Option<String>,
}

impl PhraseSpan {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    Intro,
    /// Passage ordinal.
    Passage(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SentenceId {
    pub doc_id: String,
    pub region: Region,
    /// Index within the introduction, or within the passage.
    pub ordinal: usize,
}

impl fmt::Display for SentenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.region {
            Region::Intro => write!(f, "{}#i{}", self.doc_id, self.ordinal),
            Region::Passage(p) => write!(f, "{}#p{}.{}", self.doc_id, p, self.ordinal),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    pub id: SentenceId,
    pub text: String,
    pub tokens: Vec<Token>,
    pub spans: Vec<PhraseSpan>,
}

impl AnnotatedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Surface text covered by tokens `[start, end)`.
    pub fn surface(&self, start: usize, end: usize) -> &str {
        &self.text[self.tokens[start].start..self.tokens[end - 1].end]
    }

    /// Byte range covered by tokens `[start, end)`.
    pub fn byte_range(&self, start: usize, end: usize) -> std::ops::Range<usize> {
        self.tokens[start].start..self.tokens[end - 1].end
    }
}

pub trait Annotator: Send + Sync {
    fn annotate(&self, id: SentenceId, text: &str) -> AnnotatedSentence;
}

static GAZETTEER: LazyLock<Gazetteer> = LazyLock::new(|| Gazetteer::parse(GAZETTEER_V1));

/// Multi-token surface forms mapped to entity labels, matched case-sensitively.
#[derive(Debug, Default)]
struct Gazetteer {
    // first token -> (token sequence, label), longest first
    entries: HashMap<String, Vec<(Vec<String>, String)>>,
}

impl Gazetteer {
    fn parse(data: &str) -> Self {
        let mut g = Gazetteer::default();
        for line in data.lines() {
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let Some((surface, label)) = line.split_once('\t') else {
                continue;
            };
            let toks: Vec<String> = tokenize(surface).into_iter().map(|t| t.text).collect();
            if let Some(first) = toks.first().cloned() {
                g.entries.entry(first).or_default().push((toks, label.trim().to_string()));
            }
        }
        for v in g.entries.values_mut() {
            v.sort_by_key(|e| std::cmp::Reverse(e.0.len()));
        }
        g
    }

    /// Longest entry starting at token `at`, as (length, label).
    fn match_at(&self, tokens: &[Token], at: usize) -> Option<(usize, &str)> {
        self.entries.get(&tokens[at].text)?.iter().find_map(|(seq, label)| {
            let end = at + seq.len();
            (end <= tokens.len() && tokens[at..end].iter().zip(seq).all(|(t, s)| &t.text == s))
                .then_some((seq.len(), label.as_str()))
        })
    }
}

/// Deterministic rule chunker.
///
/// * NP: maximal runs of capitalized tokens; maximal runs of non-stopword word
///   tokens bounded by stopwords or punctuation, together with their
///   head-final suffixes, all capped at [`MAX_CHUNK_TOKENS`] tokens.
/// * NE: gazetteer hits, and capitalized runs that are either longer than one
///   token or not sentence-initial.
///
/// No VP or ADJP spans are produced.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinAnnotator;

impl BuiltinAnnotator {
    pub fn spans(tokens: &[Token]) -> Vec<PhraseSpan> {
        let mut spans = Vec::new();
        let np = |start, end| PhraseSpan {
            start,
            end,
            kind: PhraseKind::NP,
            label: None,
        };

        // non-stopword runs
        for run in runs(tokens, Token::is_content) {
            for start in run.clone() {
                if run.end - start <= MAX_CHUNK_TOKENS {
                    spans.push(np(start, run.end));
                }
            }
        }

        // capitalized runs, plus gazetteer hits inside them
        let mut gazetteer_hits = Vec::new();
        let mut i = 0;
        while i < tokens.len() {
            if let Some((len, label)) = GAZETTEER.match_at(tokens, i) {
                gazetteer_hits.push((i, i + len, label.to_string()));
                i += len;
            } else {
                i += 1;
            }
        }
        for run in runs(tokens, |t| t.is_word() && t.is_capitalized()) {
            if run.len() <= MAX_CHUNK_TOKENS {
                spans.push(np(run.start, run.end));
                let covered = gazetteer_hits
                    .iter()
                    .any(|(s, e, _)| *s == run.start && *e == run.end);
                if !covered && (run.len() > 1 || run.start > 0) {
                    spans.push(PhraseSpan {
                        start: run.start,
                        end: run.end,
                        kind: PhraseKind::NE,
                        label: Some("MISC".into()),
                    });
                }
            }
        }
        for (start, end, label) in gazetteer_hits {
            spans.push(PhraseSpan {
                start,
                end,
                kind: PhraseKind::NE,
                label: Some(label),
            });
        }
        spans.sort();
        spans.dedup_by(|a, b| a.start == b.start && a.end == b.end && a.kind == b.kind);
        spans
    }
}

fn runs(tokens: &[Token], pred: impl Fn(&Token) -> bool) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, t) in tokens.iter().enumerate() {
        match (pred(t), start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(s..tokens.len());
    }
    out
}

impl Annotator for BuiltinAnnotator {
    fn annotate(&self, id: SentenceId, text: &str) -> AnnotatedSentence {
        let tokens = tokenize(text);
        let spans = Self::spans(&tokens);
        AnnotatedSentence {
            id,
            text: text.to_string(),
            tokens,
            spans,
        }
    }
}

// ---------------------------------------------------------------------------
// external annotator wire protocol

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireRequest {
    pub sid: String,
    pub text: String,
}

/// Token offsets `s`/`e` are Unicode scalar offsets into the request text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireToken {
    pub t: String,
    pub s: usize,
    pub e: usize,
}

/// Span offsets `s`/`e` are half-open token indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireSpan {
    pub s: usize,
    pub e: usize,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireResponse {
    pub sid: String,
    pub tokens: Vec<WireToken>,
    pub spans: Vec<WireSpan>,
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("annotator process unavailable")]
    Unavailable,
    #[error("i/o with annotator process: {0}")]
    Io(#[from] std::io::Error),
    #[error("annotator closed its output")]
    Closed,
    #[error("malformed response: {0}")]
    Json(#[from] serde_json::Error),
    #[error("response for {got:?} while waiting for {expected:?}")]
    OutOfOrder { expected: String, got: String },
    #[error("invalid response: {0}")]
    Invalid(String),
}

fn char_to_byte_map(text: &str) -> Vec<usize> {
    text.char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(text.len()))
        .collect()
}

impl WireResponse {
    /// Validates the response against the request text and converts it.
    pub fn into_sentence(self, id: SentenceId, text: &str) -> Result<AnnotatedSentence, WireError> {
        let map = char_to_byte_map(text);
        let mut tokens = Vec::with_capacity(self.tokens.len());
        let mut prev_end = 0;
        for wt in &self.tokens {
            if wt.s >= wt.e || wt.e >= map.len() || map[wt.s] < prev_end {
                return Err(WireError::Invalid(format!("bad token offsets {}..{}", wt.s, wt.e)));
            }
            let tok = Token::new(text, map[wt.s], map[wt.e]);
            if tok.text != wt.t {
                return Err(WireError::Invalid(format!(
                    "token text {:?} does not match offsets ({:?})",
                    wt.t, tok.text
                )));
            }
            prev_end = tok.end;
            tokens.push(tok);
        }
        let mut spans = Vec::with_capacity(self.spans.len());
        for ws in self.spans {
            if ws.s >= ws.e || ws.e > tokens.len() {
                return Err(WireError::Invalid(format!("span {}..{} out of bounds", ws.s, ws.e)));
            }
            let kind = ws.kind.parse().map_err(WireError::Invalid)?;
            spans.push(PhraseSpan {
                start: ws.s,
                end: ws.e,
                kind,
                label: ws.label,
            });
        }
        Ok(AnnotatedSentence {
            id,
            text: text.to_string(),
            tokens,
            spans,
        })
    }
}

impl AnnotatedSentence {
    /// Wire form of this annotation, as an external annotator would send it.
    pub fn to_wire(&self) -> WireResponse {
        let map = char_to_byte_map(&self.text);
        let char_of = |b: usize| map.binary_search(&b).expect("token offsets on char boundaries");
        WireResponse {
            sid: self.id.to_string(),
            tokens: self
                .tokens
                .iter()
                .map(|t| WireToken {
                    t: t.text.clone(),
                    s: char_of(t.start),
                    e: char_of(t.end),
                })
                .collect(),
            spans: self
                .spans
                .iter()
                .map(|s| WireSpan {
                    s: s.start,
                    e: s.end,
                    kind: s.kind.to_string(),
                    label: s.label.clone(),
                })
                .collect(),
        }
    }
}

struct ExternalProcess {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ExternalProcess {
    fn spawn(command: &str) -> std::io::Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ExternalProcess {
            child,
            stdin,
            stdout,
        })
    }

    fn request(&mut self, req: &WireRequest) -> Result<WireResponse, WireError> {
        let mut line = serde_json::to_string(req)?;
        line.push('\n');
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.flush()?;
        let mut buf = String::new();
        if self.stdout.read_line(&mut buf)? == 0 {
            return Err(WireError::Closed);
        }
        let resp: WireResponse = serde_json::from_str(buf.trim_end())?;
        if resp.sid != req.sid {
            return Err(WireError::OutOfOrder {
                expected: req.sid.clone(),
                got: resp.sid,
            });
        }
        Ok(resp)
    }
}

impl Drop for ExternalProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Annotator backed by a child process speaking the wire protocol. Requests
/// are serialized through one process. Any failure falls back to the builtin
/// annotator for that sentence; once the protocol desynchronizes the process
/// is dropped and every later sentence falls back too.
pub struct ExternalAnnotator {
    command: String,
    process: Mutex<Option<ExternalProcess>>,
    fallbacks: AtomicUsize,
}

impl ExternalAnnotator {
    pub fn spawn(command: &str) -> std::io::Result<Self> {
        let process = ExternalProcess::spawn(command)?;
        Ok(ExternalAnnotator {
            command: command.to_string(),
            process: Mutex::new(Some(process)),
            fallbacks: AtomicUsize::new(0),
        })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Number of sentences annotated by the builtin fallback so far.
    pub fn fallback_count(&self) -> usize {
        self.fallbacks.load(Ordering::Relaxed)
    }

    pub fn try_annotate(&self, id: &SentenceId, text: &str) -> Result<AnnotatedSentence, WireError> {
        let mut guard = self.process.lock().unwrap_or_else(|p| p.into_inner());
        let proc = guard.as_mut().ok_or(WireError::Unavailable)?;
        let req = WireRequest {
            sid: id.to_string(),
            text: text.to_string(),
        };
        match proc.request(&req) {
            Ok(resp) => resp.into_sentence(id.clone(), text),
            Err(e) => {
                // stream state is unknown after a transport error
                *guard = None;
                Err(e)
            }
        }
    }
}

impl Annotator for ExternalAnnotator {
    fn annotate(&self, id: SentenceId, text: &str) -> AnnotatedSentence {
        match self.try_annotate(&id, text) {
            Ok(s) => s,
            Err(e) => {
                let n = self.fallbacks.fetch_add(1, Ordering::Relaxed);
                if n == 0 {
                    warn!("external annotator failed on {id}: {e}; using builtin");
                } else {
                    debug!("external annotator failed on {id}: {e}; using builtin");
                }
                BuiltinAnnotator.annotate(id, text)
            }
        }
    }
}

/// How sentences get annotated.
pub enum AnnotatorHandle {
    Builtin(BuiltinAnnotator),
    External(ExternalAnnotator),
}

impl AnnotatorHandle {
    /// Parses `builtin` or `exec:COMMAND`.
    pub fn from_spec(spec: &str) -> Result<Self, String> {
        if spec == "builtin" {
            Ok(AnnotatorHandle::Builtin(BuiltinAnnotator))
        } else if let Some(cmd) = spec.strip_prefix("exec:") {
            ExternalAnnotator::spawn(cmd)
                .map(AnnotatorHandle::External)
                .map_err(|e| format!("cannot start annotator {cmd:?}: {e}"))
        } else {
            Err(format!("unknown annotator {spec:?}; expected builtin or exec:CMD"))
        }
    }

    pub fn fallback_count(&self) -> usize {
        match self {
            AnnotatorHandle::Builtin(_) => 0,
            AnnotatorHandle::External(e) => e.fallback_count(),
        }
    }
}

impl Annotator for AnnotatorHandle {
    fn annotate(&self, id: SentenceId, text: &str) -> AnnotatedSentence {
        match self {
            AnnotatorHandle::Builtin(b) => b.annotate(id, text),
            AnnotatorHandle::External(e) => e.annotate(id, text),
        }
    }
}

/// Annotates `sentence` with `annotator`.
pub fn annotate_sentence(id: SentenceId, sentence: &str, annotator: &dyn Annotator) -> AnnotatedSentence {
    annotator.annotate(id, sentence)
}
