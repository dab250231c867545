//! Task assignment, qualification gating and persistence for the
//! annotation service.
//!
//! [`TaskService`] is a single-writer state machine. Every mutation is
//! expressed as an [`Event`], appended to the write-ahead log and only then
//! applied, so replaying the log reproduces the state exactly. Callers pass
//! the current time explicitly.

pub mod config;
pub mod plan;
pub mod stats;
pub mod store;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agreement::{exact_match, AgreementCell, AgreementError, AgreementTable};
use crate::dataset::corpus::{CorpusFile, StoredConversion};
use crate::model::{validate_record, AnnotationRecord, Document, Entity, LinkTarget, Protocol, Violation};
use crate::scoring::grounded_to_clusters;

pub use config::{AnnotatorProfile, ServiceConfig};
pub use plan::{AssignmentPlan, SourcePlan};
pub use stats::{timing_cells, TimingCell};
use store::EventStore;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("annotator {0} is not eligible")]
    NotEligible(String),
    #[error("annotator {0} has been deactivated")]
    Inactive(String),
    #[error("no open {protocol:?} task on document {document_id} for annotator {annotator}")]
    NotIssued { annotator: String, document_id: String, protocol: Protocol },
    #[error("annotator {annotator} holds no open grounded task on document {document_id}")]
    NoGroundedTask { annotator: String, document_id: String },
    #[error("entity name is empty")]
    BlankEntityName,
    #[error("a corpus is already loaded")]
    CorpusAlreadyLoaded,
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("invalid gold annotation for {document_id}: {reason}")]
    InvalidGold { document_id: String, reason: String },
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error("event log line {line}: {message}")]
    CorruptLog { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ServiceError {
    /// Refusals are the caller's fault; everything else is internal.
    pub fn is_refusal(&self) -> bool {
        !matches!(
            self,
            ServiceError::Io(_) | ServiceError::Json(_) | ServiceError::CorruptLog { .. } | ServiceError::Agreement(_)
        )
    }
}

/// A trusted annotation used for secret tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub document: Document,
    pub record: AnnotationRecord,
}

pub fn load_gold_pool(path: &Path) -> Result<Vec<GoldAnnotation>, ServiceError> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

/// What an annotator receives. Test and regular tasks look the same.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskBundle {
    pub document: Document,
    pub protocol: Protocol,
    pub issued_at: DateTime<Utc>,
    pub deadline: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubmissionOutcome {
    Accepted { record: AnnotationRecord },
    DraftSaved,
    Rejected { violations: Vec<Violation> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub document_id: String,
    pub score: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualificationState {
    pub annotator_id: String,
    pub completed_count: usize,
    pub active: bool,
    pub test_history: Vec<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OpenTask {
    document_id: String,
    protocol: Protocol,
    issued_at: DateTime<Utc>,
    deadline: DateTime<Utc>,
    test: bool,
    added_entities: Vec<Entity>,
    draft: Option<AnnotationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AnnotatorState {
    qualification: QualificationState,
    open: Option<OpenTask>,
}

/// Every state change of the service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    CorpusLoaded { documents: Vec<Document>, plan: AssignmentPlan },
    Issued {
        annotator: String,
        document_id: String,
        protocol: Protocol,
        issued_at: DateTime<Utc>,
        deadline: DateTime<Utc>,
        test: bool,
    },
    Expired { annotator: String },
    EntityAdded { annotator: String, entity: Entity },
    DraftSaved { record: AnnotationRecord },
    Accepted { record: AnnotationRecord },
    TestScored { record: AnnotationRecord, score: f64, passed: bool },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct State {
    documents: Vec<Document>,
    plan: AssignmentPlan,
    annotators: BTreeMap<String, AnnotatorState>,
    /// Accepted non-test records in acceptance order.
    records: Vec<AnnotationRecord>,
    test_records: Vec<AnnotationRecord>,
    issued: BTreeSet<(String, String, Protocol)>,
}

impl State {
    fn annotator(&mut self, id: &str) -> &mut AnnotatorState {
        self.annotators.entry(id.to_string()).or_insert_with(|| AnnotatorState {
            qualification: QualificationState {
                annotator_id: id.to_string(),
                completed_count: 0,
                active: true,
                test_history: Vec::new(),
            },
            open: None,
        })
    }

    fn apply(&mut self, event: Event) {
        match event {
            Event::CorpusLoaded { documents, plan } => {
                self.documents = documents;
                self.plan = plan;
            }
            Event::Issued { annotator, document_id, protocol, issued_at, deadline, test } => {
                self.issued.insert((annotator.clone(), document_id.clone(), protocol));
                self.annotator(&annotator).open = Some(OpenTask {
                    document_id,
                    protocol,
                    issued_at,
                    deadline,
                    test,
                    added_entities: Vec::new(),
                    draft: None,
                });
            }
            Event::Expired { annotator } => self.annotator(&annotator).open = None,
            Event::EntityAdded { annotator, entity } => {
                if let Some(open) = self.annotator(&annotator).open.as_mut() {
                    open.added_entities.push(entity);
                }
            }
            Event::DraftSaved { record } => {
                if let Some(open) = self.annotator(&record.annotator_id).open.as_mut() {
                    open.draft = Some(record);
                }
            }
            Event::Accepted { record } => {
                let a = self.annotator(&record.annotator_id);
                a.open = None;
                a.qualification.completed_count += 1;
                self.records.push(record);
            }
            Event::TestScored { record, score, passed } => {
                let a = self.annotator(&record.annotator_id);
                a.open = None;
                let q = &mut a.qualification;
                q.completed_count += 1;
                q.active &= passed;
                q.test_history.push(TestResult { document_id: record.document_id.clone(), score, passed });
                self.test_records.push(record);
            }
        }
    }

    /// Accepted records plus outstanding regular tasks, per (document, protocol).
    fn coverage(&self) -> HashMap<(&str, Protocol), usize> {
        let mut cov = HashMap::new();
        for r in &self.records {
            *cov.entry((r.document_id.as_str(), r.protocol)).or_default() += 1;
        }
        for a in self.annotators.values() {
            if let Some(open) = a.open.as_ref().filter(|o| !o.test) {
                *cov.entry((open.document_id.as_str(), open.protocol)).or_default() += 1;
            }
        }
        cov
    }
}

pub struct TaskService {
    config: ServiceConfig,
    gold: Vec<GoldAnnotation>,
    state: State,
    store: Option<EventStore<Event>>,
    since_snapshot: usize,
}

impl TaskService {
    /// A service without persistence.
    pub fn in_memory(config: ServiceConfig, gold: Vec<GoldAnnotation>) -> Result<Self, ServiceError> {
        check_gold(&gold)?;
        Ok(TaskService { config, gold, state: State::default(), store: None, since_snapshot: 0 })
    }

    /// Open or create a persistent service in `dir`, replaying its log.
    pub fn open(dir: &Path, config: ServiceConfig, gold: Vec<GoldAnnotation>) -> Result<Self, ServiceError> {
        check_gold(&gold)?;
        let (store, recovered) = EventStore::open::<State>(dir)?;
        let mut state = recovered.state.unwrap_or_default();
        let since_snapshot = recovered.events.len();
        for e in recovered.events {
            state.apply(e);
        }
        Ok(TaskService { config, gold, state, store: Some(store), since_snapshot })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    fn commit(&mut self, event: Event) -> Result<(), ServiceError> {
        if let Some(store) = self.store.as_mut() {
            store.append(&event)?;
        }
        self.state.apply(event);
        self.since_snapshot += 1;
        if let Some(store) = self.store.as_mut() {
            if self.since_snapshot >= self.config.snapshot_every.max(1) {
                store.write_snapshot(&self.state)?;
                self.since_snapshot = 0;
            }
        }
        Ok(())
    }

    pub fn documents(&self) -> &[Document] {
        &self.state.documents
    }

    pub fn plan(&self) -> &AssignmentPlan {
        &self.state.plan
    }

    /// Accepted non-test records in acceptance order.
    pub fn records(&self) -> &[AnnotationRecord] {
        &self.state.records
    }

    pub fn qualification(&self, annotator: &str) -> Option<&QualificationState> {
        self.state.annotators.get(annotator).map(|a| &a.qualification)
    }

    pub fn load_corpus(&mut self, documents: Vec<Document>) -> Result<(), ServiceError> {
        if !self.state.documents.is_empty() {
            return Err(ServiceError::CorpusAlreadyLoaded);
        }
        if documents.is_empty() {
            return Err(ServiceError::InvalidCorpus("no documents".into()));
        }
        let mut ids = BTreeSet::new();
        for d in &documents {
            if !ids.insert(d.id.as_str()) {
                return Err(ServiceError::InvalidCorpus(format!("duplicate document id {}", d.id)));
            }
            if self.gold.iter().any(|g| g.document.id == d.id) {
                return Err(ServiceError::InvalidCorpus(format!("document {} is also a test document", d.id)));
            }
        }
        let plan = AssignmentPlan::build(&documents, self.config.doubly_per_source, self.config.singly_per_source);
        self.commit(Event::CorpusLoaded { documents, plan })
    }

    fn deadline(&self, issued_at: DateTime<Utc>) -> DateTime<Utc> {
        issued_at + Duration::milliseconds((self.config.time_limit_secs * 1000.0).round() as i64)
    }

    fn document(&self, id: &str) -> Option<&Document> {
        self.state
            .documents
            .iter()
            .find(|d| d.id == id)
            .or_else(|| self.gold.iter().map(|g| &g.document).find(|d| d.id == id))
    }

    fn bundle(&self, open: &OpenTask) -> Option<TaskBundle> {
        Some(TaskBundle {
            document: self.document(&open.document_id)?.clone(),
            protocol: open.protocol,
            issued_at: open.issued_at,
            deadline: open.deadline,
        })
    }

    /// Return tasks whose deadline has passed to the pool.
    pub fn reclaim_expired(&mut self, now: DateTime<Utc>) -> Result<usize, ServiceError> {
        self.reclaim_expired_except(now, None)
    }

    fn reclaim_expired_except(&mut self, now: DateTime<Utc>, keep: Option<&str>) -> Result<usize, ServiceError> {
        let expired: Vec<String> = self
            .state
            .annotators
            .iter()
            .filter(|(id, a)| Some(id.as_str()) != keep && a.open.as_ref().is_some_and(|o| now > o.deadline))
            .map(|(id, _)| id.clone())
            .collect();
        for annotator in &expired {
            self.commit(Event::Expired { annotator: annotator.clone() })?;
        }
        Ok(expired.len())
    }

    /// Issue the annotator's next task, or `None` when nothing is left.
    ///
    /// An annotator holding an unexpired task gets that task again.
    pub fn next_task(
        &mut self,
        annotator: &str,
        protocol: Option<Protocol>,
        now: DateTime<Utc>,
    ) -> Result<Option<TaskBundle>, ServiceError> {
        self.reclaim_expired(now)?;
        if !self.config.is_eligible(annotator) {
            return Err(ServiceError::NotEligible(annotator.to_string()));
        }
        let existing = self.state.annotators.get(annotator);
        if existing.is_some_and(|a| !a.qualification.active) {
            return Err(ServiceError::Inactive(annotator.to_string()));
        }
        if let Some(open) = existing.and_then(|a| a.open.as_ref()) {
            return Ok(self.bundle(open));
        }
        let completed = existing.map_or(0, |a| a.qualification.completed_count);
        let allowed = |p: Protocol| protocol.is_none_or(|q| q == p);
        let issued = &self.state.issued;
        let not_issued = |doc: &str, p: Protocol| !issued.contains(&(annotator.to_string(), doc.to_string(), p));

        let choice = if self.config.is_test_position(completed) {
            self.gold
                .iter()
                .find(|g| allowed(g.record.protocol) && not_issued(&g.document.id, g.record.protocol))
                .map(|g| (g.document.id.clone(), g.record.protocol, true))
        } else {
            let coverage = self.state.coverage();
            self.state
                .plan
                .slots()
                .flat_map(|(doc, target)| Protocol::ALL.iter().map(move |&p| (doc, target, p)))
                .filter(|&(doc, target, p)| {
                    allowed(p) && not_issued(doc, p) && coverage.get(&(doc, p)).copied().unwrap_or(0) < target
                })
                .min_by_key(|&(doc, _, p)| (coverage.get(&(doc, p)).copied().unwrap_or(0), doc, p))
                .map(|(doc, _, p)| (doc.to_string(), p, false))
        };
        let Some((document_id, protocol, test)) = choice else {
            return Ok(None);
        };
        let deadline = self.deadline(now);
        self.commit(Event::Issued {
            annotator: annotator.to_string(),
            document_id,
            protocol,
            issued_at: now,
            deadline,
            test,
        })?;
        Ok(self.state.annotators[annotator].open.as_ref().and_then(|o| self.bundle(o)))
    }

    /// Accept, store as draft, or reject a record for the annotator's open task.
    ///
    /// Timing is taken from the server: the record starts at issue time and
    /// finishes now. Resubmitting the labels of an already accepted record
    /// returns the original outcome without storing a second copy.
    pub fn submit(&mut self, mut record: AnnotationRecord, now: DateTime<Utc>) -> Result<SubmissionOutcome, ServiceError> {
        self.reclaim_expired_except(now, Some(&record.annotator_id))?;
        let (annotator, document_id, protocol) =
            (record.annotator_id.clone(), record.document_id.clone(), record.protocol);
        let not_issued = || ServiceError::NotIssued {
            annotator: annotator.clone(),
            document_id: document_id.clone(),
            protocol,
        };
        let open = self
            .state
            .annotators
            .get(&record.annotator_id)
            .and_then(|a| a.open.as_ref())
            .filter(|o| o.document_id == record.document_id && o.protocol == record.protocol)
            .cloned();
        let Some(open) = open else {
            let previous = self
                .state
                .records
                .iter()
                .chain(&self.state.test_records)
                .find(|r| {
                    r.annotator_id == record.annotator_id
                        && r.document_id == record.document_id
                        && r.protocol == record.protocol
                });
            return match previous {
                Some(p) if record.complete && p.links == record.links => {
                    Ok(SubmissionOutcome::Accepted { record: p.clone() })
                }
                _ => Err(not_issued()),
            };
        };

        record.set_timing(open.issued_at, now);
        let linked: BTreeSet<&String> = record
            .links
            .values()
            .flat_map(|t| match t {
                LinkTarget::EntitySet { entity_ids } => entity_ids.iter().collect(),
                _ => Vec::new(),
            })
            .collect();
        record.added_entities = open.added_entities.iter().filter(|e| linked.contains(&e.id)).cloned().collect();

        let doc = self.document(&open.document_id).ok_or_else(not_issued)?;
        if let Err(violations) = validate_record(&record, doc) {
            if violations.iter().any(|v| matches!(v, Violation::Overtime { .. })) {
                self.commit(Event::Expired { annotator: record.annotator_id.clone() })?;
            }
            return Ok(SubmissionOutcome::Rejected { violations });
        }
        if !record.complete {
            self.commit(Event::DraftSaved { record })?;
            return Ok(SubmissionOutcome::DraftSaved);
        }
        if open.test {
            let gold = self
                .gold
                .iter()
                .find(|g| g.document.id == open.document_id && g.record.protocol == open.protocol)
                .ok_or_else(not_issued)?;
            let score = exact_match(&gold.record, &record)?;
            let passed = score > self.config.gating_threshold;
            self.commit(Event::TestScored { record: record.clone(), score, passed })?;
        } else {
            self.commit(Event::Accepted { record: record.clone() })?;
        }
        Ok(SubmissionOutcome::Accepted { record })
    }

    /// The latest draft saved for the annotator's open task.
    pub fn draft(&self, annotator: &str) -> Option<&AnnotationRecord> {
        self.state.annotators.get(annotator)?.open.as_ref()?.draft.as_ref()
    }

    /// Create an entity visible only within the annotator's open grounded task.
    pub fn add_entity(
        &mut self,
        annotator: &str,
        document_id: &str,
        name: &str,
        now: DateTime<Utc>,
    ) -> Result<Entity, ServiceError> {
        self.reclaim_expired(now)?;
        let refusal = || ServiceError::NoGroundedTask {
            annotator: annotator.to_string(),
            document_id: document_id.to_string(),
        };
        let open = self
            .state
            .annotators
            .get(annotator)
            .and_then(|a| a.open.as_ref())
            .filter(|o| o.document_id == document_id && o.protocol == Protocol::Grounded)
            .ok_or_else(refusal)?;
        let name = name.trim();
        if name.is_empty() {
            return Err(ServiceError::BlankEntityName);
        }
        if let Some(e) = open.added_entities.iter().find(|e| e.canonical_name == name) {
            return Ok(e.clone());
        }
        let doc = self.document(document_id).ok_or_else(refusal)?;
        let taken = |id: &str| doc.entity(id).is_some() || open.added_entities.iter().any(|e| e.id == id);
        let id = (0..).map(|k| format!("x{k}")).find(|id| !taken(id)).expect("unbounded ids");
        let entity = Entity::annotator_added(id, name);
        self.commit(Event::EntityAdded { annotator: annotator.to_string(), entity: entity.clone() })?;
        Ok(entity)
    }

    fn source_of(&self, document_id: &str) -> Option<crate::model::Source> {
        self.state.documents.iter().find(|d| d.id == document_id).map(|d| d.source)
    }

    pub fn timing_stats(&self) -> Vec<TimingCell> {
        timing_cells(
            self.state
                .records
                .iter()
                .filter_map(|r| Some((self.source_of(&r.document_id)?, r.protocol, r.duration))),
        )
    }

    /// Agreement of the first two records of each doubly annotated document.
    pub fn agreement_report(&self) -> Result<Vec<AgreementCell>, ServiceError> {
        let mut table = AgreementTable::default();
        for (source, doc) in self.state.plan.doubly_annotated() {
            for protocol in Protocol::ALL {
                let mut pair = self.state.records.iter().filter(|r| r.document_id == doc && r.protocol == protocol);
                if let (Some(a), Some(b)) = (pair.next(), pair.next()) {
                    table.add(source, a, b)?;
                }
            }
        }
        Ok(table.rows())
    }

    /// Annotators deactivated after some of their records were accepted.
    pub fn flagged_annotators(&self) -> Vec<String> {
        self.state
            .annotators
            .iter()
            .filter(|(id, a)| !a.qualification.active && self.state.records.iter().any(|r| &r.annotator_id == *id))
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// The corpus with accepted records and grounded conversion reports.
    pub fn export(&self) -> CorpusFile {
        let conversion_reports = self
            .state
            .records
            .iter()
            .filter(|r| r.protocol == Protocol::Grounded)
            .filter_map(|r| {
                let doc = self.state.documents.iter().find(|d| d.id == r.document_id)?;
                let report = grounded_to_clusters(doc, r).ok()?;
                Some(StoredConversion {
                    document_id: r.document_id.clone(),
                    annotator_id: r.annotator_id.clone(),
                    report,
                })
            })
            .collect();
        let flagged = self.flagged_annotators();
        CorpusFile {
            documents: self.state.documents.clone(),
            records: self.state.records.clone(),
            conversion_reports: Some(conversion_reports),
            flagged_annotators: (!flagged.is_empty()).then_some(flagged),
            ..CorpusFile::default()
        }
    }
}

fn check_gold(gold: &[GoldAnnotation]) -> Result<(), ServiceError> {
    let mut seen = BTreeSet::new();
    for g in gold {
        let invalid = |reason: String| ServiceError::InvalidGold { document_id: g.document.id.clone(), reason };
        if !seen.insert((g.document.id.as_str(), g.record.protocol)) {
            return Err(invalid("listed twice for one protocol".into()));
        }
        if !g.record.complete {
            return Err(invalid("record is not complete".into()));
        }
        if let Err(v) = validate_record(&g.record, &g.document) {
            let codes: Vec<&str> = v.iter().map(Violation::code).collect();
            return Err(invalid(codes.join(", ")));
        }
    }
    Ok(())
}
