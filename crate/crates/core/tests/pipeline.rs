mod support;

use clozeforge::annotate::BuiltinAnnotator;
use clozeforge::clozegen::annotate_document;
use clozeforge::corpus::segment;
use clozeforge::dataset::write_jsonl;
use clozeforge::text::SentenceSplitter;
use clozeforge::{generate_corpus, ClozeConfig, SegmentationConfig};
use support::{oracle, synth};

#[test]
fn corpus_run_agrees_with_per_document_oracle() {
    let docs: Vec<_> = (0..50).map(|s| synth::document(1000 + s, 30)).collect();
    let seg = SegmentationConfig::default();
    let cfg = ClozeConfig::default();
    let run = generate_corpus(&docs, &seg, &cfg, &BuiltinAnnotator);

    let mut expected = Vec::new();
    let mut skipped = 0;
    for d in &docs {
        match segment(d, &seg, &SentenceSplitter::default()) {
            Ok(doc) => expected.extend(oracle::brute_force(&doc, &annotate_document(&doc, &BuiltinAnnotator), &cfg)),
            Err(_) => skipped += 1,
        }
    }
    let got: Vec<_> = run.triples.iter().map(oracle::key).collect();
    assert_eq!(got, expected);
    assert_eq!(run.stats.triples, expected.len());
    assert_eq!(run.stats.skipped, skipped);
    assert_eq!(run.stats.documents, 50);
    assert!(run.triples.iter().all(|t| t.scores.is_some()));
}

#[test]
fn output_independent_of_thread_count() {
    let docs: Vec<_> = (0..300).map(|s| synth::document(s, 25)).collect();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let r = pool.install(|| generate_corpus(&docs, &SegmentationConfig::default(), &ClozeConfig::default(), &BuiltinAnnotator));
        let mut buf = Vec::new();
        write_jsonl(&r.triples, &mut buf).unwrap();
        (buf, r.stats)
    };
    let one = run(1);
    assert!(!one.0.is_empty());
    assert_eq!(one, run(4));
}
