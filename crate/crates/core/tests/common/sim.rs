//! Scripted annotators working through a full assignment plan.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use chrono::{DateTime, Duration, TimeZone, Utc};

use groundcoref::service::{GoldAnnotation, ServiceConfig, ServiceError, SubmissionOutcome, TaskService};
use groundcoref::{
    detect_markables, AnnotationRecord, Document, Entity, LinkTarget, Protocol, PronounLexicon, Provenance, Section,
    SectionKind, Source, Span,
};

pub fn document(id: &str, source: Source) -> Document {
    let kind = if source == Source::Wiki { SectionKind::Summary } else { SectionKind::Context };
    let sections = vec![Section {
        index: 0,
        kind,
        text: format!("Ann met Bob in {id}. She told him that they would go, and he agreed."),
    }];
    let markables = detect_markables(&sections, &PronounLexicon::default());
    let entity = |i: usize, name: &str| Entity {
        id: format!("e{i}"),
        canonical_name: name.into(),
        aliases: vec![name.into()],
        provenance: Provenance::Wikilink,
        target: Some(format!("/wiki/{name}")),
    };
    Document {
        id: id.into(),
        source,
        title: id.into(),
        sections,
        markables,
        entities: vec![entity(0, "Ann"), entity(1, "Bob")],
    }
}

/// Label every markable; `careless` answers no-reference everywhere.
pub fn answer(annotator: &str, doc: &Document, protocol: Protocol, careless: bool) -> AnnotationRecord {
    let t = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
    let mut r = AnnotationRecord::new(annotator, &doc.id, protocol, t, t);
    for m in &doc.markables {
        let target = match protocol {
            _ if careless => LinkTarget::NoReference,
            Protocol::Grounded => LinkTarget::entities(["e0"]),
            Protocol::Span => LinkTarget::spans([Span::new(0, 0, 3)]),
        };
        r.links.insert(m.id.clone(), target);
    }
    r
}

pub fn corpus(per_source: usize) -> Vec<Document> {
    Source::ALL
        .iter()
        .flat_map(|&s| (0..per_source).map(move |i| document(&format!("{}-{i:03}", s.as_str()), s)))
        .collect()
}

pub fn gold_pool(n: usize) -> Vec<GoldAnnotation> {
    (0..n)
        .flat_map(|i| {
            let d = document(&format!("gold-{i:02}"), Source::Wiki);
            Protocol::ALL.map(|p| GoldAnnotation { record: answer("expert", &d, p, false), document: d.clone() })
        })
        .collect()
}

pub struct SimulationReport {
    pub documents: usize,
    pub records: usize,
    pub expected_records: usize,
    pub restarted_with: usize,
    pub problems: Vec<String>,
}

/// Run 12 scripted annotators over a 200-document corpus. One annotator
/// fails its first secret test; another abandons every fourth task. The
/// service is dropped and reopened from disk halfway through.
pub fn run(dir: &Path) -> SimulationReport {
    let config = ServiceConfig { snapshot_every: 40, ..ServiceConfig::default() };
    let gold = gold_pool(15);
    let mut service = TaskService::open(dir, config.clone(), gold.clone()).expect("open service");
    service.load_corpus(corpus(100)).expect("load corpus");

    let annotators: Vec<String> = (0..12).map(|i| format!("ann{i:02}")).collect();
    let careless = "ann03";
    let lazy = "ann07";
    let mut problems = Vec::new();
    let mut issued: HashSet<(String, String, Protocol)> = HashSet::new();
    let mut asleep_until: BTreeMap<String, DateTime<Utc>> = BTreeMap::new();
    let mut deactivated: HashSet<String> = HashSet::new();
    let mut lazy_count = 0usize;
    let mut clock = Utc.with_ymd_and_hms(2021, 6, 1, 8, 0, 0).unwrap();
    let mut restarted_with = 0;

    for _round in 0..100_000 {
        let mut progress = false;
        for a in &annotators {
            if deactivated.contains(a) || asleep_until.get(a).is_some_and(|t| *t >= clock) {
                continue;
            }
            clock += Duration::seconds(1);
            let task = match service.next_task(a, None, clock) {
                Ok(Some(task)) => task,
                Ok(None) => continue,
                Err(ServiceError::Inactive(_)) => {
                    deactivated.insert(a.clone());
                    continue;
                }
                Err(e) => {
                    problems.push(format!("next_task for {a}: {e}"));
                    continue;
                }
            };
            progress = true;
            if !issued.insert((a.clone(), task.document.id.clone(), task.protocol)) {
                problems.push(format!("{a} received {} / {:?} twice", task.document.id, task.protocol));
            }
            let is_test = task.document.id.starts_with("gold");
            if a == lazy && !is_test {
                lazy_count += 1;
                if lazy_count % 4 == 0 {
                    asleep_until.insert(a.clone(), task.deadline);
                    continue;
                }
            }
            let record = answer(a, &task.document, task.protocol, a == careless && is_test);
            match service.submit(record, clock + Duration::seconds(45)) {
                Ok(SubmissionOutcome::Accepted { .. }) => {}
                other => problems.push(format!("{a} submission on {}: {other:?}", task.document.id)),
            }
        }
        clock += Duration::seconds(30);

        if restarted_with == 0 && service.records().len() >= 260 {
            let before = service.records().to_vec();
            drop(service);
            service = TaskService::open(dir, config.clone(), gold.clone()).expect("reopen service");
            if service.records() != before.as_slice() {
                problems.push("records changed across restart".into());
            }
            restarted_with = before.len();
        }

        if !progress {
            if asleep_until.values().any(|t| *t >= clock) {
                clock += Duration::seconds(config.time_limit_secs as i64);
                continue;
            }
            break;
        }
    }

    if restarted_with == 0 {
        problems.push("the run never reached the restart point".into());
    }
    if !deactivated.contains(careless) {
        problems.push(format!("{careless} was never deactivated"));
    }
    if service.export().flagged_annotators != Some(vec![careless.to_string()]) {
        problems.push(format!("{careless} is not flagged in the export"));
    }

    let mut expected_records = 0;
    for (doc, target) in service.plan().slots() {
        for protocol in Protocol::ALL {
            let n = service.records().iter().filter(|r| r.document_id == doc && r.protocol == protocol).count();
            expected_records += target;
            if n != target {
                problems.push(format!("{doc} / {protocol:?}: {n} records, wanted {target}"));
            }
        }
    }
    let mut seen = HashSet::new();
    for r in service.records() {
        if !seen.insert((&r.annotator_id, &r.document_id, r.protocol)) {
            problems.push(format!("duplicate record {} / {} / {:?}", r.annotator_id, r.document_id, r.protocol));
        }
    }

    SimulationReport {
        documents: service.documents().len(),
        records: service.records().len(),
        expected_records,
        restarted_with,
        problems,
    }
}
