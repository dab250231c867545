//! Annotation data model shared by both annotation protocols.
//!
//! The serde representation of these types is the wire and storage format
//! of the task service and of corpus files.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::char_len;

/// Ten minutes, in seconds.
pub const TIME_LIMIT_SECS: f64 = 600.0;

/// Slack allowed between `duration` and `finished_at - started_at`.
const DURATION_SLACK_SECS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Wiki,
    Quac,
}

impl Source {
    pub const ALL: [Source; 2] = [Source::Wiki, Source::Quac];

    pub fn as_str(self) -> &'static str {
        match self {
            Source::Wiki => "wiki",
            Source::Quac => "quac",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Grounded,
    Span,
}

impl Protocol {
    pub const ALL: [Protocol; 2] = [Protocol::Grounded, Protocol::Span];

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Grounded => "grounded",
            Protocol::Span => "span",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grounded" => Ok(Protocol::Grounded),
            "span" => Ok(Protocol::Span),
            other => Err(format!("unknown protocol {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Summary,
    Context,
    Question,
    Answer,
}

impl SectionKind {
    /// Summary and context sections count toward document admission.
    pub fn is_primary(self) -> bool {
        matches!(self, SectionKind::Summary | SectionKind::Context)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub index: usize,
    pub kind: SectionKind,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PronounCategory {
    Personal,
    Possessive,
    Reflexive,
    Demonstrative,
    Interrogative,
    Relative,
    Indefinite,
    Reciprocal,
}

impl PronounCategory {
    pub const ALL: [PronounCategory; 8] = [
        PronounCategory::Personal,
        PronounCategory::Possessive,
        PronounCategory::Reflexive,
        PronounCategory::Demonstrative,
        PronounCategory::Interrogative,
        PronounCategory::Relative,
        PronounCategory::Indefinite,
        PronounCategory::Reciprocal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PronounCategory::Personal => "personal",
            PronounCategory::Possessive => "possessive",
            PronounCategory::Reflexive => "reflexive",
            PronounCategory::Demonstrative => "demonstrative",
            PronounCategory::Interrogative => "interrogative",
            PronounCategory::Relative => "relative",
            PronounCategory::Indefinite => "indefinite",
            PronounCategory::Reciprocal => "reciprocal",
        }
    }
}

impl std::str::FromStr for PronounCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PronounCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown pronoun category {s:?}"))
    }
}

/// A pronoun occurrence eligible for annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Markable {
    pub id: String,
    pub section_index: usize,
    /// Half-open character offsets into the section text.
    pub span: (usize, usize),
    pub surface: String,
    pub category: PronounCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Wikilink,
    Wikidata,
    AnnotatorAdded,
}

/// A constant of the document model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub canonical_name: String,
    /// Every surface observed for this entity, canonical name first.
    pub aliases: Vec<String>,
    pub provenance: Provenance,
    #[serde(default)]
    pub target: Option<String>,
}

impl Entity {
    pub fn annotator_added(id: impl Into<String>, name: impl Into<String>) -> Self {
        let name = name.into();
        Entity {
            id: id.into(),
            canonical_name: name.clone(),
            aliases: vec![name],
            provenance: Provenance::AnnotatorAdded,
            target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source: Source,
    pub title: String,
    pub sections: Vec<Section>,
    pub markables: Vec<Markable>,
    pub entities: Vec<Entity>,
}

impl Document {
    pub fn section(&self, index: usize) -> Option<&Section> {
        self.sections.iter().find(|s| s.index == index)
    }

    pub fn markable(&self, id: &str) -> Option<&Markable> {
        self.markables.iter().find(|m| m.id == id)
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }
}

/// An antecedent span: `[char_start, char_end)` inside one section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub section_index: usize,
    pub char_start: usize,
    pub char_end: usize,
}

impl Span {
    pub fn new(section_index: usize, char_start: usize, char_end: usize) -> Self {
        Span { section_index, char_start, char_end }
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.section_index == other.section_index
            && self.char_start < other.char_end
            && other.char_start < self.char_end
    }
}

/// What a markable is linked to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum LinkTarget {
    EntitySet { entity_ids: BTreeSet<String> },
    SpanSet { spans: Vec<Span> },
    NoReference,
}

impl LinkTarget {
    pub fn entities<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        LinkTarget::EntitySet { entity_ids: ids.into_iter().map(Into::into).collect() }
    }

    pub fn spans(spans: impl IntoIterator<Item = Span>) -> Self {
        LinkTarget::SpanSet { spans: spans.into_iter().collect() }
    }
}

/// One annotator's labeling of one document under one protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub annotator_id: String,
    pub document_id: String,
    pub protocol: Protocol,
    pub links: BTreeMap<String, LinkTarget>,
    #[serde(default)]
    pub added_entities: Vec<Entity>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    /// Seconds between `started_at` and `finished_at`.
    pub duration: f64,
    /// Drafts carry `false`; only complete records are evaluated.
    #[serde(default = "default_complete")]
    pub complete: bool,
}

fn default_complete() -> bool {
    true
}

impl AnnotationRecord {
    pub fn new(
        annotator_id: impl Into<String>,
        document_id: impl Into<String>,
        protocol: Protocol,
        started_at: DateTime<Utc>,
        finished_at: DateTime<Utc>,
    ) -> Self {
        AnnotationRecord {
            annotator_id: annotator_id.into(),
            document_id: document_id.into(),
            protocol,
            links: BTreeMap::new(),
            added_entities: Vec::new(),
            started_at,
            finished_at,
            duration: seconds_between(started_at, finished_at),
            complete: true,
        }
    }

    pub fn with_link(mut self, markable_id: impl Into<String>, target: LinkTarget) -> Self {
        self.links.insert(markable_id.into(), target);
        self
    }

    /// Overwrite the timing fields with the given interval.
    pub fn set_timing(&mut self, started_at: DateTime<Utc>, finished_at: DateTime<Utc>) {
        self.started_at = started_at;
        self.finished_at = finished_at;
        self.duration = seconds_between(started_at, finished_at);
    }

    /// Equality of everything an annotator decides, ignoring timing.
    pub fn same_labels(&self, other: &AnnotationRecord) -> bool {
        self.annotator_id == other.annotator_id
            && self.document_id == other.document_id
            && self.protocol == other.protocol
            && self.links == other.links
            && self.added_entities == other.added_entities
            && self.complete == other.complete
    }
}

pub fn seconds_between(start: DateTime<Utc>, end: DateTime<Utc>) -> f64 {
    (end - start).num_milliseconds() as f64 / 1000.0
}

/// A problem found by [`validate_record`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum Violation {
    DocumentMismatch { expected: String, found: String },
    UnknownMarkable { markable_id: String },
    UnknownEntity { markable_id: String, entity_id: String },
    SpanOutOfBounds { markable_id: String, span: Span },
    EmptyLink { markable_id: String },
    ProtocolMismatch { markable_id: String },
    Incomplete { missing: Vec<String> },
    Overtime { duration: f64 },
    DurationMismatch { duration: f64, elapsed: f64 },
    AddedEntityProvenance { entity_id: String },
    AddedEntityUnused { entity_id: String },
    DuplicateEntityId { entity_id: String },
}

impl Violation {
    pub fn code(&self) -> &'static str {
        match self {
            Violation::DocumentMismatch { .. } => "document_mismatch",
            Violation::UnknownMarkable { .. } => "unknown_markable",
            Violation::UnknownEntity { .. } => "unknown_entity",
            Violation::SpanOutOfBounds { .. } => "span_out_of_bounds",
            Violation::EmptyLink { .. } => "empty_link",
            Violation::ProtocolMismatch { .. } => "protocol_mismatch",
            Violation::Incomplete { .. } => "incomplete",
            Violation::Overtime { .. } => "overtime",
            Violation::DurationMismatch { .. } => "duration_mismatch",
            Violation::AddedEntityProvenance { .. } => "added_entity_provenance",
            Violation::AddedEntityUnused { .. } => "added_entity_unused",
            Violation::DuplicateEntityId { .. } => "duplicate_entity_id",
        }
    }
}

/// Check a record against its document. Violations are returned as data.
pub fn validate_record(record: &AnnotationRecord, doc: &Document) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();

    if record.document_id != doc.id {
        violations.push(Violation::DocumentMismatch {
            expected: doc.id.clone(),
            found: record.document_id.clone(),
        });
    }

    let mut entity_ids: HashSet<&str> = doc.entities.iter().map(|e| e.id.as_str()).collect();
    for added in &record.added_entities {
        if added.provenance != Provenance::AnnotatorAdded {
            violations.push(Violation::AddedEntityProvenance { entity_id: added.id.clone() });
        }
        if !entity_ids.insert(added.id.as_str()) {
            violations.push(Violation::DuplicateEntityId { entity_id: added.id.clone() });
        }
    }

    let mut used_entities: HashSet<&str> = HashSet::new();
    for (markable_id, target) in &record.links {
        if doc.markable(markable_id).is_none() {
            violations.push(Violation::UnknownMarkable { markable_id: markable_id.clone() });
        }
        match target {
            LinkTarget::EntitySet { entity_ids: ids } => {
                if record.protocol != Protocol::Grounded {
                    violations.push(Violation::ProtocolMismatch { markable_id: markable_id.clone() });
                }
                if ids.is_empty() {
                    violations.push(Violation::EmptyLink { markable_id: markable_id.clone() });
                }
                for id in ids {
                    used_entities.insert(id.as_str());
                    if !entity_ids.contains(id.as_str()) {
                        violations.push(Violation::UnknownEntity {
                            markable_id: markable_id.clone(),
                            entity_id: id.clone(),
                        });
                    }
                }
            }
            LinkTarget::SpanSet { spans } => {
                if record.protocol != Protocol::Span {
                    violations.push(Violation::ProtocolMismatch { markable_id: markable_id.clone() });
                }
                if spans.is_empty() {
                    violations.push(Violation::EmptyLink { markable_id: markable_id.clone() });
                }
                for span in spans {
                    let in_bounds = doc.section(span.section_index).is_some_and(|s| {
                        span.char_start < span.char_end && span.char_end <= char_len(&s.text)
                    });
                    if !in_bounds {
                        violations.push(Violation::SpanOutOfBounds {
                            markable_id: markable_id.clone(),
                            span: *span,
                        });
                    }
                }
            }
            LinkTarget::NoReference => {}
        }
    }

    for added in &record.added_entities {
        if !used_entities.contains(added.id.as_str()) {
            violations.push(Violation::AddedEntityUnused { entity_id: added.id.clone() });
        }
    }

    if record.complete {
        let missing: Vec<String> = doc
            .markables
            .iter()
            .filter(|m| !record.links.contains_key(&m.id))
            .map(|m| m.id.clone())
            .collect();
        if !missing.is_empty() {
            violations.push(Violation::Incomplete { missing });
        }
    }

    let elapsed = seconds_between(record.started_at, record.finished_at);
    if (record.duration - elapsed).abs() > DURATION_SLACK_SECS {
        violations.push(Violation::DurationMismatch { duration: record.duration, elapsed });
    }
    if record.duration > TIME_LIMIT_SECS {
        violations.push(Violation::Overtime { duration: record.duration });
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("a linking episode needs at least one span; mark no-reference explicitly")]
    EmptyLinkEpisode,
}

/// Close a span-linking episode: the union of all partial selections in
/// click order, deduplicated by exact offsets.
pub fn merge_multi_span_link(partials: &[Vec<Span>]) -> Result<LinkTarget, ModelError> {
    let mut seen = HashSet::new();
    let spans: Vec<Span> = partials
        .iter()
        .flatten()
        .filter(|s| seen.insert(**s))
        .copied()
        .collect();
    if spans.is_empty() {
        return Err(ModelError::EmptyLinkEpisode);
    }
    Ok(LinkTarget::SpanSet { spans })
}
