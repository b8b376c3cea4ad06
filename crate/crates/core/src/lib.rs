//! Cloze question generation from document structure.
//!
//! Introduction sentences of a document are matched against its body
//! passages; a phrase shared verbatim by both becomes the answer, the passage
//! becomes the context, and the introduction sentence with the phrase blanked
//! out becomes the question. Alongside generation the crate ships the
//! evaluation measures (span F1/EM, MRR, list F1) and the analyses (feature
//! regression, question-type gains) used to study models trained on the
//! resulting data.

pub mod analysis;
pub mod annotate;
pub mod clozegen;
pub mod corpus;
pub mod dataset;
pub mod metrics;
pub mod pipeline;
pub mod text;

pub use annotate::{AnnotatedSentence, Annotator, AnnotatorHandle, BuiltinAnnotator, PhraseKind, PhraseSpan};
pub use clozegen::{generate_document, ClozeConfig, ClozeTriple};
pub use corpus::{Document, Passage, RawDocument, SegmentationConfig};
pub use dataset::{Criterion, CriterionScores, TopK};
pub use pipeline::{generate_corpus, CorpusRun, RunStats};
