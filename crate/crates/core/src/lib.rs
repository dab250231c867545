//! Grounded (model-based) coreference annotation.
//!
//! Documents are ingested from rendered wiki markup into an entity
//! inventory plus a list of pronoun markables. Annotators link each
//! markable either to entities of the inventory (grounded protocol) or to
//! antecedent spans of text (span protocol). The crate then measures
//! inter-annotator agreement, converts grounded annotations into
//! coreference clusters, scores clusters with MUC, B³ and CEAF-φ4, and
//! reads and writes the corpus and CoNLL-2012 formats.
//!
//! The [`service`] module holds the task-assignment state machine that the
//! HTTP server in the CLI crate drives.

pub mod agreement;
pub mod dataset;
pub mod ingest;
pub mod model;
pub mod scoring;
pub mod service;
pub mod text;

pub use agreement::{exact_match, link_f1, AgreementError, AgreementReport};
pub use dataset::{
    conll::{from_conll, to_conll, ConllDocument},
    corpus::{read_corpus, write_corpus, CorpusFile},
    DatasetError,
};
pub use ingest::{
    admit_document, build_quac_document, build_wiki_document, detect_markables,
    extract_entities, extract_summary, lexicon::PronounLexicon, strip_markup, IngestError,
    QuacRecord, RawPage,
};
pub use model::{
    merge_multi_span_link, validate_record, AnnotationRecord, Document, Entity, LinkTarget,
    Markable, Protocol, Provenance, Section, SectionKind, Source, Span, Violation,
};
pub use scoring::{
    b_cubed, ceaf_e, grounded_to_clusters, macro_average, muc, ClusterSet, ConversionReport,
    MentionId, ScoreTriple, ScoringError,
};
