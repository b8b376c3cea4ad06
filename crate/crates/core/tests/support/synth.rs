//! Seeded synthetic documents with a small vocabulary, so that introduction
//! sentences and passages share phrases often.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use clozeforge::corpus::{normalize_text, RawDocument};

const CONTENT: &[&str] = &[
    "river", "stone", "bridge", "market", "lantern", "harbor", "copper", "orchard", "signal",
    "winter", "garden", "engine", "ledger", "valley", "festival", "mirror", "quarry", "café",
    "naïve", "sensor", "archive", "tower", "cotton", "meadow", "protein", "voltage", "tunnel",
];
const CAPITALIZED: &[&str] = &[
    "Alba", "Borodin", "Castile", "Dorset", "Elmira", "Fenwick", "Paris", "March", "New York",
    "Ada Lovelace",
];
const STOP: &[&str] = &[
    "the", "of", "and", "a", "in", "to", "with", "was", "is", "by", "for", "on", "from", "its",
];
const PUNCT: &[&str] = &[",", "-", ";", "(", ")"];

fn word(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..100) {
        0..=44 => CONTENT.choose(rng).unwrap().to_string(),
        45..=59 => CAPITALIZED.choose(rng).unwrap().to_string(),
        60..=91 => STOP.choose(rng).unwrap().to_string(),
        92..=97 => PUNCT.choose(rng).unwrap().to_string(),
        98 => "1998".to_string(),
        _ => "@placeholder".to_string(),
    }
}

/// One sentence: capitalized first word, 3..=12 words, terminal punctuation.
pub fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(3..=12);
    let mut words: Vec<String> = (0..n).map(|_| word(rng)).collect();
    let first = words[0].clone();
    let mut chars = first.chars();
    words[0] = match chars.next() {
        Some(c) if c.is_alphabetic() => c.to_uppercase().chain(chars).collect(),
        _ => format!("Then {first}"),
    };
    let mut s = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 && !matches!(w.as_str(), "," | ";" | ")") {
            s.push(' ');
        }
        s.push_str(w);
    }
    s.push(*['.', '.', '.', '?', '!'].choose(rng).unwrap());
    s
}

/// A random document with at most `max_sentences` sentences. Intro sentences
/// frequently splice in phrases from the body.
pub fn document(seed: u64, max_sentences: usize) -> RawDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = rng.gen_range(2..=max_sentences.max(2));
    let mut sentences: Vec<String> = (0..total).map(|_| sentence(&mut rng)).collect();
    // copy body fragments into the first sentences to create matches
    let intro_guess = (total as f64 * 0.2).ceil() as usize;
    for i in 0..intro_guess.min(total) {
        if total > intro_guess && rng.gen_bool(0.8) {
            let donor = sentences[rng.gen_range(intro_guess..total)].clone();
            let words: Vec<&str> = donor.trim_end_matches(['.', '?', '!']).split(' ').collect();
            let a = rng.gen_range(0..words.len());
            let b = rng.gen_range(a..words.len().min(a + 4)) + 1;
            let frag = words[a..b].join(" ");
            let host = sentences[i].trim_end_matches(['.', '?', '!']).to_string();
            sentences[i] = format!("{host} with {frag} and the {}.", CONTENT.choose(&mut rng).unwrap());
        }
    }
    let mut text = String::new();
    let paragraph_prob = if rng.gen_bool(0.3) { 0.0 } else { 0.25 };
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            text.push_str(if rng.gen_bool(paragraph_prob) { "\n\n" } else { " " });
        }
        text.push_str(s);
    }
    RawDocument {
        id: format!("synth-{seed}"),
        title: String::new(),
        text: normalize_text(&text),
        intro: None,
        meta: Default::default(),
    }
}

/// The document as one jsonl line.
pub fn jsonl_line(doc: &RawDocument) -> String {
    serde_json::json!({"id": doc.id, "text": doc.text}).to_string()
}

/// `n` triples with random scores drawn from small grids so ties are common.
pub fn scored_triples(seed: u64, n: usize) -> Vec<clozeforge::ClozeTriple> {
    use clozeforge::clozegen::{Answer, Provenance};
    use clozeforge::{ClozeTriple, CriterionScores, PhraseKind};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let answer = CONTENT.choose(&mut rng).unwrap().to_string();
            let passage = format!("The {answer} stood near the {}.", CONTENT.choose(&mut rng).unwrap());
            let start = 4;
            ClozeTriple {
                id: format!("{:016x}", rng.gen::<u64>()),
                question: format!("Where was the @placeholder {i}?"),
                answer: Answer {
                    end: start + answer.chars().count(),
                    text: answer,
                    start,
                    kind: PhraseKind::NP,
                },
                passage,
                prov: Provenance {
                    doc: format!("d{}", i % 7),
                    q: i % 3,
                    p: i % 5,
                },
                scores: Some(CriterionScores {
                    jaccard: rng.gen_range(0..=10) as f64 / 10.0,
                    tfidf: rng.gen_range(0..=40) as f64 / 8.0,
                    ans_len: rng.gen_range(1..=6),
                }),
            }
        })
        .collect()
}

/// Sort-then-slice reference for subset selection.
pub fn select_oracle(
    triples: &[clozeforge::ClozeTriple],
    criterion: clozeforge::Criterion,
    k: usize,
) -> Vec<clozeforge::ClozeTriple> {
    use clozeforge::Criterion;
    let mut v = triples.to_vec();
    v.sort_by(|a, b| a.id.cmp(&b.id));
    let value = |t: &clozeforge::ClozeTriple| {
        let s = t.scores.unwrap();
        match criterion {
            Criterion::Jaccard => -s.jaccard,
            Criterion::Tfidf => -s.tfidf,
            Criterion::AnsLen => s.ans_len as f64,
            Criterion::None => 0.0,
        }
    };
    // stable: equal values keep id order
    v.sort_by(|a, b| value(a).partial_cmp(&value(b)).unwrap());
    v.truncate(k);
    v
}
