//! Corpus-level generation: segment, annotate and generate per document in
//! parallel, merge in input order, then score against a corpus idf index.

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::Annotator;
use crate::clozegen::{annotate_document, generate_annotated, ClozeConfig, ClozeTriple};
use crate::corpus::{segment, Document, RawDocument, SegmentationConfig};
use crate::dataset::{score, IdfIndex};
use crate::text::SentenceSplitter;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub documents: usize,
    pub segmented: usize,
    pub skipped: usize,
    pub passages: usize,
    pub candidates: usize,
    pub pruned: usize,
    pub duplicates: usize,
    pub triples: usize,
}

#[derive(Debug, Clone)]
pub struct CorpusRun {
    pub triples: Vec<ClozeTriple>,
    pub stats: RunStats,
}

enum DocOutcome {
    Skipped,
    Done {
        passages: Vec<String>,
        generated: crate::clozegen::Generated,
    },
}

fn process(raw: &RawDocument, seg: &SegmentationConfig, cloze: &ClozeConfig, splitter: &SentenceSplitter, annotator: &dyn Annotator) -> DocOutcome {
    let doc: Document = match segment(raw, seg, splitter) {
        Ok(d) => d,
        Err(e) => {
            debug!("skipping document: {e}");
            return DocOutcome::Skipped;
        }
    };
    let ann = annotate_document(&doc, annotator);
    let generated = generate_annotated(&doc, &ann, cloze);
    DocOutcome::Done {
        passages: doc.passages.into_iter().map(|p| p.text).collect(),
        generated,
    }
}

/// Runs generation over `docs` on the current rayon pool. Output order is
/// input-document order regardless of the number of worker threads.
pub fn generate_corpus(
    docs: &[RawDocument],
    seg: &SegmentationConfig,
    cloze: &ClozeConfig,
    annotator: &dyn Annotator,
) -> CorpusRun {
    let splitter = SentenceSplitter::default();
    let outcomes: Vec<DocOutcome> = docs
        .par_iter()
        .map(|d| process(d, seg, cloze, &splitter, annotator))
        .collect();

    let mut stats = RunStats {
        documents: docs.len(),
        ..Default::default()
    };
    let mut index = IdfIndex::default();
    let mut triples = Vec::new();
    for outcome in outcomes {
        match outcome {
            DocOutcome::Skipped => stats.skipped += 1,
            DocOutcome::Done { passages, generated } => {
                stats.segmented += 1;
                stats.passages += passages.len();
                stats.candidates += generated.candidates;
                stats.pruned += generated.pruned;
                stats.duplicates += generated.duplicates;
                for p in &passages {
                    index.add(p);
                }
                triples.extend(generated.triples);
            }
        }
    }
    score(&mut triples, &index, &cloze.placeholder);
    stats.triples = triples.len();
    CorpusRun { triples, stats }
}
