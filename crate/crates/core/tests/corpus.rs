use std::io::Cursor;

use clozeforge::corpus::{
    ingest_corpus, normalize_text, read_jsonl, segment, CorpusFormat, MarkerMode, RawDocument, SegmentError,
    SegmentationConfig,
};
use clozeforge::text::SentenceSplitter;
use proptest::prelude::*;

fn raw(id: &str, text: &str) -> RawDocument {
    RawDocument {
        id: id.into(),
        title: String::new(),
        text: normalize_text(text),
        intro: None,
        meta: Default::default(),
    }
}

/// Paragraphs of numbered sentences, sizes given.
fn paragraphs(sizes: &[usize]) -> String {
    let mut n = 0;
    sizes
        .iter()
        .map(|&k| {
            (0..k)
                .map(|_| {
                    n += 1;
                    format!("Sentence {n} talks about item {}.", n * 7)
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[test]
fn hundred_sentences_in_four_paragraphs() {
    let sizes = [15, 30, 25, 30];
    let doc = segment(&raw("h", &paragraphs(&sizes)), &SegmentationConfig::default(), &SentenceSplitter::default()).unwrap();
    assert_eq!(doc.intro_sentences.len(), 20);
    // intro eats paragraph 0 and five sentences of paragraph 1
    let per_passage: Vec<usize> = doc.passages.iter().map(|p| p.sentences.len()).collect();
    assert_eq!(per_passage, [25, 25, 30]);
    let recount: usize = doc
        .passages
        .iter()
        .map(|p| p.text.matches("Sentence ").count())
        .sum();
    assert_eq!(recount, 80);
    assert_eq!(doc.intro_sentences[19].text, "Sentence 20 talks about item 140.");
    assert!(doc.passages[0].text.starts_with("Sentence 21 "));
    assert_eq!(doc.reconstruct().as_deref(), Some(doc.text.as_str()));
}

#[test]
fn segmentation_is_deterministic() {
    let r = raw("d", &paragraphs(&[3, 9, 4]));
    let cfg = SegmentationConfig::default();
    let a = segment(&r, &cfg, &SentenceSplitter::default()).unwrap();
    let b = segment(&r, &cfg, &SentenceSplitter::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn degenerate_documents_are_rejected() {
    let cfg = SegmentationConfig::default();
    let sp = SentenceSplitter::default();
    assert_eq!(segment(&raw("one", "Just one sentence."), &cfg, &sp), Err(SegmentError::TooFewSentences("one".into())));
    let all_intro = SegmentationConfig {
        intro_fraction: 1.0,
        ..cfg.clone()
    };
    assert_eq!(segment(&raw("k1", &paragraphs(&[4])), &all_intro, &sp), Err(SegmentError::EmptyBody("k1".into())));
}

#[test]
fn explicit_intro_and_fraction_mode() {
    let mut r = raw("x", &paragraphs(&[10]));
    r.intro = Some("The lead sentence. A second lead sentence.".into());
    let sp = SentenceSplitter::default();
    let explicit = segment(&r, &SegmentationConfig::default(), &sp).unwrap();
    assert_eq!(explicit.intro_sentences.len(), 2);
    assert_eq!(explicit.passages.iter().map(|p| p.sentences.len()).sum::<usize>(), 10);
    assert_eq!(explicit.reconstruct().as_deref(), Some(explicit.text.as_str()));

    let frac = SegmentationConfig {
        marker_mode: MarkerMode::FractionOfSentences,
        ..SegmentationConfig::default()
    };
    let d = segment(&r, &frac, &sp).unwrap();
    assert_eq!(d.intro_sentences.len(), 2);
    assert_eq!(d.intro_sentences[0].text, "Sentence 1 talks about item 7.");
}

#[test]
fn malformed_jsonl_lines_are_skipped_with_line_numbers() {
    let input = concat!(
        "{\"id\":\"a\",\"text\":\"One. Two.\"}\n",
        "not json\n",
        "\n",
        "{\"id\":\"b\"}\n",
        "{\"id\":\"c\",\"text\":\"   \"}\n",
        "{\"id\":\"d\",\"text\":\"Caf\\u0065\\u0301   ok.\",\"source\":\"web\",\"n\":3}\n",
    );
    let got = read_jsonl(Cursor::new(input)).unwrap();
    let ids: Vec<&str> = got.documents.iter().map(|d| d.id.as_str()).collect();
    assert_eq!(ids, ["a", "d"]);
    let lines: Vec<usize> = got.skipped.iter().map(|s| s.line).collect();
    assert_eq!(lines, [2, 4, 5]);
    // NFC and whitespace collapse
    assert_eq!(got.documents[1].text, "Caf\u{e9} ok.");
    assert_eq!(got.documents[1].meta.get("source").map(String::as_str), Some("web"));
}

#[test]
fn plain_text_directory() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("b.txt"), "Beta one. Beta two.").unwrap();
    std::fs::write(dir.path().join("a.txt"), "Alpha one.\n\n\nAlpha two.").unwrap();
    std::fs::write(dir.path().join("empty.txt"), " \n").unwrap();
    let got = ingest_corpus(dir.path(), CorpusFormat::PlainTextDir).unwrap();
    let ids: Vec<&str> = got.documents.iter().map(|d| d.id.as_str()).collect();
    assert_eq!(ids, ["a", "b"]);
    assert_eq!(got.documents[0].text, "Alpha one.\n\nAlpha two.");
    assert_eq!(got.skipped.len(), 1);
    assert!(ingest_corpus(&dir.path().join("missing.jsonl"), CorpusFormat::Jsonl).is_err());
}

proptest! {
    #[test]
    fn intro_is_ceiling_of_fraction(sizes in prop::collection::vec(1usize..12, 1..6), k in 1u32..=19) {
        let total: usize = sizes.iter().sum();
        prop_assume!(total >= 2);
        let fraction = k as f64 / 20.0;
        let cfg = SegmentationConfig { intro_fraction: fraction, ..SegmentationConfig::default() };
        let expected = (k as usize * total).div_ceil(20);
        let doc = segment(&raw("p", &paragraphs(&sizes)), &cfg, &SentenceSplitter::default());
        if expected.max(1) >= total {
            prop_assert!(doc.is_err());
        } else {
            let doc = doc.unwrap();
            prop_assert_eq!(doc.intro_sentences.len(), expected.max(1));
            let body: usize = doc.passages.iter().map(|p| p.sentences.len()).sum();
            prop_assert_eq!(body + doc.intro_sentences.len(), total);
            prop_assert_eq!(doc.reconstruct(), Some(doc.text.clone()));
            for p in &doc.passages {
                prop_assert_eq!(&doc.text[p.span.clone()], p.text.as_str());
                prop_assert!(!p.text.contains("\n\n") || sizes.len() == 1);
            }
        }
    }

    #[test]
    fn normalization_is_idempotent(s in "[a-z \t\n\u{e9}\u{301}]{0,60}") {
        let once = normalize_text(&s);
        prop_assert_eq!(normalize_text(&once), once);
    }
}
