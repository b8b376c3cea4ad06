//! Word-level tokenization, sentence splitting and the bundled stopword list.
//!
//! Offsets produced here are byte offsets into the string that was passed in,
//! so `&text[tok.start..tok.end] == tok.text` always holds.

use std::collections::{BTreeSet, HashSet};
use std::ops::Range;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

const STOPWORDS_V1: &str = include_str!("../data/stopwords-v1.txt");

/// Version tag of the bundled stopword list; recorded in dataset manifests.
pub const STOPWORDS_VERSION: &str = "v1";

static STOPWORDS: LazyLock<HashSet<&'static str>> = LazyLock::new(|| {
    STOPWORDS_V1
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
});

/// Returns true if `lower` (already case-folded) is in the bundled stopword list.
pub fn is_stopword(lower: &str) -> bool {
    STOPWORDS.contains(lower)
}

/// Number of entries in the bundled stopword list.
pub fn stopword_count() -> usize {
    STOPWORDS.len()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Byte offset of the first character.
    pub start: usize,
    /// Byte offset one past the last character.
    pub end: usize,
    pub lower: String,
    pub is_stopword: bool,
}

impl Token {
    pub fn new(source: &str, start: usize, end: usize) -> Self {
        let text = source[start..end].to_string();
        let lower = text.to_lowercase();
        let is_stopword = is_stopword(&lower);
        Token {
            text,
            start,
            end,
            lower,
            is_stopword,
        }
    }

    /// A word token contains at least one alphanumeric character.
    pub fn is_word(&self) -> bool {
        self.text.chars().any(char::is_alphanumeric)
    }

    /// Word token that is not a stopword.
    pub fn is_content(&self) -> bool {
        !self.is_stopword && self.is_word()
    }

    pub fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }
}

/// Splits on whitespace and punctuation. Runs of alphanumeric characters form
/// one token, every other non-space character is a token of its own. An `@`
/// directly followed by an alphanumeric run is kept attached to it so that
/// placeholders such as `@placeholder` stay a single token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut iter = text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if c.is_whitespace() {
            continue;
        }
        let mut end = i + c.len_utf8();
        let joins = c.is_alphanumeric()
            || (c == '@' && iter.peek().is_some_and(|&(_, n)| n.is_alphanumeric()));
        if joins {
            while let Some(&(j, n)) = iter.peek() {
                if !n.is_alphanumeric() {
                    break;
                }
                end = j + n.len_utf8();
                iter.next();
            }
        }
        out.push(Token::new(text, i, end));
    }
    out
}

/// Distinct case-folded content-word types of `text`.
pub fn content_types(text: &str) -> BTreeSet<String> {
    tokenize(text)
        .into_iter()
        .filter(Token::is_content)
        .map(|t| t.lower)
        .collect()
}

/// Jaccard similarity of two type sets. Two empty sets score 0.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}

const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "e.g", "i.e", "inc", "ltd",
    "co", "corp", "fig", "al", "approx", "dept", "gen", "gov", "no", "vol", "jan", "feb", "mar",
    "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec", "u.s", "u.k", "ph.d", "mt",
];

/// Rule-based sentence splitter.
///
/// A boundary is sentence-final punctuation (`.`, `?`, `!`, optionally followed
/// by closing quotes or brackets), then whitespace, then an uppercase letter or
/// a digit. A period is not a boundary when the word before it is a known
/// abbreviation or, when enabled, a single letter (initials).
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: HashSet<String>,
    single_letter_abbreviations: bool,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter {
            abbreviations: DEFAULT_ABBREVIATIONS.iter().map(|s| s.to_string()).collect(),
            single_letter_abbreviations: true,
        }
    }
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}' | '\u{bb}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}' | '\u{ab}')
}

impl SentenceSplitter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_single_letter_abbreviations(mut self, enabled: bool) -> Self {
        self.single_letter_abbreviations = enabled;
        self
    }

    pub fn with_abbreviations<I, S>(mut self, abbreviations: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.abbreviations = abbreviations.into_iter().map(Into::into).collect();
        self
    }

    pub fn split<'a>(&self, text: &'a str) -> Vec<&'a str> {
        self.spans(text).into_iter().map(|r| &text[r]).collect()
    }

    /// Byte ranges of the sentences in `text`, trimmed of surrounding whitespace.
    pub fn spans(&self, text: &str) -> Vec<Range<usize>> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = Vec::new();
        let mut sent_start = 0usize;
        let mut i = 0usize;
        while i < chars.len() {
            let (_, c) = chars[i];
            if !matches!(c, '.' | '?' | '!') {
                i += 1;
                continue;
            }
            let term_idx = i;
            let mut j = i + 1;
            while j < chars.len() && (matches!(chars[j].1, '.' | '?' | '!') || is_closer(chars[j].1))
            {
                j += 1;
            }
            // j: first char after the terminal cluster
            let mut k = j;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            let boundary = k > j && k < chars.len() && {
                let mut n = k;
                while n < chars.len() && is_opener(chars[n].1) {
                    n += 1;
                }
                n < chars.len() && (chars[n].1.is_uppercase() || chars[n].1.is_ascii_digit())
            };
            if boundary && !(c == '.' && self.is_abbreviation(&chars, term_idx)) {
                let end = if j < chars.len() { chars[j].0 } else { text.len() };
                push_trimmed(text, sent_start..end, &mut out);
                sent_start = chars[k].0;
                i = k;
            } else {
                i = j;
            }
        }
        push_trimmed(text, sent_start..text.len(), &mut out);
        out
    }

    fn is_abbreviation(&self, chars: &[(usize, char)], period_idx: usize) -> bool {
        // word = maximal run of letters and inner periods before the terminal period
        let mut s = period_idx;
        while s > 0 && (chars[s - 1].1.is_alphabetic() || chars[s - 1].1 == '.') {
            s -= 1;
        }
        let word: String = chars[s..period_idx].iter().map(|&(_, c)| c).collect();
        let word = word.trim_start_matches('.');
        if word.is_empty() {
            return false;
        }
        if self.single_letter_abbreviations
            && word.chars().count() == 1
            && word.chars().all(char::is_uppercase)
        {
            return true;
        }
        self.abbreviations.contains(&word.to_lowercase())
    }
}

fn push_trimmed(text: &str, range: Range<usize>, out: &mut Vec<Range<usize>>) {
    let slice = &text[range.clone()];
    let lead = slice.len() - slice.trim_start().len();
    let trail = slice.len() - slice.trim_end().len();
    if lead + trail < slice.len() {
        out.push(range.start + lead..range.end - trail);
    }
}

/// Splits `text` into sentences with the default splitter.
pub fn split_sentences(text: &str) -> Vec<&str> {
    SentenceSplitter::default().split(text)
}
