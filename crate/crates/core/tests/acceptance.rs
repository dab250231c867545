//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p groundcoref --test acceptance`. Exits non-zero
//! when any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration as StdDuration, Instant};

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use common::{fixtures, gen, oracle, sim};
use groundcoref::ingest::MIN_PRONOUNS;
use groundcoref::scoring::assignment::max_weight_assignment;
use groundcoref::service::{GoldAnnotation, ServiceConfig, ServiceError, SubmissionOutcome, TaskService};
use groundcoref::{
    admit_document, b_cubed, build_wiki_document, ceaf_e, detect_markables, exact_match, from_conll,
    grounded_to_clusters, link_f1, muc, read_corpus, to_conll, write_corpus, AnnotationRecord, ClusterSet,
    CorpusFile, Document, Entity, LinkTarget, MentionId, Protocol, PronounLexicon, Provenance, RawPage,
    ScoreTriple, ScoringError, Section, SectionKind, Source,
};

/// Largest tolerated deviation between a scorer and its oracle.
const ORACLE_TOLERANCE: f64 = 1e-9;
/// Wall-clock budget for the exhaustive oracle comparison.
const ORACLE_TIME_BUDGET: StdDuration = StdDuration::from_secs(120);
const MAX_MENTIONS: usize = 8;
const MAX_CLUSTERS: usize = 4;
const ASSIGNMENT_CASES: usize = 1000;
const ASSIGNMENT_SIZE: usize = 6;
const PARTITION_PAIRS: usize = 500;
const RECORD_PAIRS: usize = 500;
const ROUND_TRIPS: usize = 200;
const MIN_FIXTURE_PAGES: usize = 20;

type Check = fn() -> Result<String, String>;
type Metric = fn(&ClusterSet<u32>, &ClusterSet<u32>) -> Result<ScoreTriple, ScoringError>;
type OracleMetric = fn(&oracle::Partition, &oracle::Partition) -> (f64, f64, f64);

const METRICS: [(&str, Metric, OracleMetric); 3] = [
    ("MUC", muc::<u32>, oracle::muc),
    ("B3", b_cubed::<u32>, oracle::b_cubed),
    ("CEAFe", ceaf_e::<u32>, oracle::ceaf_e),
];

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cs(p: &oracle::Partition) -> ClusterSet<u32> {
    ClusterSet::new(p.clone())
}

fn metric_oracles() -> Result<String, String> {
    let start = Instant::now();
    let mut pairs = 0usize;
    let mut worst = 0.0f64;
    for n in 0..=MAX_MENTIONS {
        let parts = oracle::partitions(n, MAX_CLUSTERS);
        let sets: Vec<ClusterSet<u32>> = parts.iter().map(cs).collect();
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
        let chunk = parts.len().div_ceil(threads).max(1);
        let results: Vec<Result<f64, String>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..parts.len())
                .step_by(chunk)
                .map(|lo| {
                    let (parts, sets) = (&parts, &sets);
                    scope.spawn(move || {
                        let mut worst = 0.0f64;
                        for i in lo..(lo + chunk).min(parts.len()) {
                            for j in 0..parts.len() {
                                for (name, metric, reference) in METRICS {
                                    let got = metric(&sets[i], &sets[j]).map_err(|e| e.to_string())?;
                                    let (p, r, f) = reference(&parts[i], &parts[j]);
                                    let dev = (got.precision - p)
                                        .abs()
                                        .max((got.recall - r).abs())
                                        .max((got.f1 - f).abs());
                                    if dev.is_nan() || dev > ORACLE_TOLERANCE {
                                        return Err(format!(
                                            "{name} key={:?} response={:?}: got {got:?}, oracle ({p}, {r}, {f})",
                                            parts[i], parts[j]
                                        ));
                                    }
                                    worst = worst.max(dev);
                                }
                            }
                        }
                        Ok(worst)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        for r in results {
            worst = worst.max(r?);
        }
        pairs += parts.len() * parts.len();
    }
    let elapsed = start.elapsed();
    ensure(elapsed <= ORACLE_TIME_BUDGET, || format!("took {elapsed:.1?}, budget {ORACLE_TIME_BUDGET:?}"))?;
    Ok(format!("{pairs} partition pairs, max deviation {worst:.1e}, {elapsed:.1?}"))
}

fn assignment_optimality() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0xCEAF);
    for case in 0..ASSIGNMENT_CASES {
        // Alternate continuous weights with coarse ones that force ties.
        let weights: Vec<Vec<f64>> = (0..ASSIGNMENT_SIZE)
            .map(|_| {
                (0..ASSIGNMENT_SIZE)
                    .map(|_| if case % 2 == 0 { rng.random::<f64>() } else { rng.random_range(0..4) as f64 / 4.0 })
                    .collect()
            })
            .collect();
        let got = max_weight_assignment(&weights);
        let best = oracle::best_alignment(&weights);
        ensure(got.total == best, || format!("case {case}: {} vs brute force {best}", got.total))?;
        let mut cols: Vec<usize> = got.row_to_col.iter().map(|c| c.expect("square matrix")).collect();
        let row_sum: f64 = cols.iter().enumerate().map(|(i, &j)| weights[i][j]).sum();
        ensure(row_sum == got.total, || format!("case {case}: reported total differs from its assignment"))?;
        cols.sort_unstable();
        cols.dedup();
        ensure(cols.len() == ASSIGNMENT_SIZE, || format!("case {case}: not a permutation"))?;
    }
    Ok(format!("{ASSIGNMENT_CASES} random {ASSIGNMENT_SIZE}x{ASSIGNMENT_SIZE} matrices, exact equality"))
}

fn identity_and_duality() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0xD0A1);
    let mut muc_linkless = 0;
    for case in 0..PARTITION_PAIRS {
        let n = rng.random_range(1..=12);
        let k = gen::partition(&mut rng, n, 5);
        let r = gen::partition(&mut rng, n, 5);
        for (name, metric, _) in METRICS {
            let kr = metric(&cs(&k), &cs(&r)).map_err(|e| e.to_string())?;
            let rk = metric(&cs(&r), &cs(&k)).map_err(|e| e.to_string())?;
            ensure(kr.precision == rk.recall && kr.recall == rk.precision, || {
                format!("{name} case {case}: P(k,r)={} R(r,k)={}, R(k,r)={} P(r,k)={}", kr.precision, rk.recall, kr.recall, rk.precision)
            })?;
            let same = metric(&cs(&k), &cs(&k)).map_err(|e| e.to_string())?;
            // MUC counts links; a key of singletons has none to recover.
            if name == "MUC" && k.iter().all(|c| c.len() < 2) {
                muc_linkless += 1;
                ensure(same == ScoreTriple::new(0.0, 0.0), || format!("MUC case {case}: link-less key scored {same:?}"))?;
                continue;
            }
            if k.is_empty() {
                continue;
            }
            ensure(same == ScoreTriple::PERFECT, || format!("{name} case {case}: key=response scored {same:?}"))?;
        }
    }
    Ok(format!("{PARTITION_PAIRS} pairs x 3 scorers ({muc_linkless} link-less keys score 0 under MUC by convention)"))
}

fn document_from(id: &str, text: &str, entities: &[(&str, &str)]) -> Document {
    let sections = vec![Section { index: 0, kind: SectionKind::Summary, text: text.into() }];
    let markables = detect_markables(&sections, &PronounLexicon::default());
    Document {
        id: id.into(),
        source: Source::Wiki,
        title: id.into(),
        sections,
        markables,
        entities: entities
            .iter()
            .map(|&(eid, name)| Entity {
                id: eid.into(),
                canonical_name: name.into(),
                aliases: vec![name.into()],
                provenance: Provenance::Wikilink,
                target: Some(format!("/wiki/{}", name.replace(' ', "_"))),
            })
            .collect(),
    }
}

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 3, 1, 9, 0, 0).unwrap()
}

fn agreement_properties() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0xA62E);
    let mut pairs = 0;
    while pairs < RECORD_PAIRS {
        let doc = gen::document(&mut rng, "d");
        if doc.markables.is_empty() {
            continue;
        }
        let protocol = if pairs % 2 == 0 { Protocol::Grounded } else { Protocol::Span };
        let a = gen::record(&mut rng, &doc, "a", protocol);
        let b = gen::perturb(&mut rng, &doc, &a, 0.5, "b");
        let em = |x, y| exact_match(x, y).map_err(|e| e.to_string());
        let f1 = |x, y| link_f1(x, y).map_err(|e| e.to_string());
        ensure(em(&a, &b)? == em(&b, &a)?, || format!("pair {pairs}: exact match asymmetric"))?;
        ensure(f1(&a, &b)? == f1(&b, &a)?, || format!("pair {pairs}: link F1 asymmetric"))?;
        ensure(em(&a, &a)? == 1.0 && f1(&a, &a)? == 1.0, || format!("pair {pairs}: identity fails"))?;
        ensure(em(&a, &b)? == oracle::exact_match(&a, &b), || format!("pair {pairs}: exact match disagrees with oracle"))?;
        ensure(f1(&a, &b)? == oracle::link_f1(&a, &b), || format!("pair {pairs}: link F1 disagrees with oracle"))?;
        pairs += 1;
    }

    let doc = document_from("ex", "He left.", &[("e1", "Harry Potter"), ("e2", "Ron Weasley")]);
    let only = doc.markables.first().ok_or("example has no markable")?.id.clone();
    let mut a = AnnotationRecord::new("a", "ex", Protocol::Grounded, t0(), t0());
    let mut b = a.clone();
    a.links.insert(only.clone(), LinkTarget::entities(["e1", "e2"]));
    b.links.insert(only, LinkTarget::entities(["e1"]));
    let f = link_f1(&a, &b).map_err(|e| e.to_string())?;
    ensure(f == 2.0 / 3.0, || format!("worked example gave {f}"))?;
    Ok(format!("{RECORD_PAIRS} record pairs; {{e1,e2}} vs {{e1}} gives F1 = {f}"))
}

/// A gold document whose 20 markables make every wrong link worth 0.05.
fn gold_pool() -> Vec<GoldAnnotation> {
    (0..5)
        .flat_map(|i| {
            let d = document_from(&format!("gold-{i}"), &"Bob said he ran. ".repeat(20), &[("e0", "Bob")]);
            Protocol::ALL.map(|p| GoldAnnotation { record: sim::answer("expert", &d, p, false), document: d.clone() })
        })
        .collect()
}

fn protocol_service() -> Result<TaskService, String> {
    let mut s = TaskService::in_memory(ServiceConfig::default(), gold_pool()).map_err(|e| e.to_string())?;
    s.load_corpus(sim::corpus(20)).map_err(|e| e.to_string())?;
    Ok(s)
}

/// Fetch one task and answer it, getting `wrong` markables wrong on tests.
/// Returns whether the task was a test.
fn work(s: &mut TaskService, annotator: &str, wrong: usize, at: DateTime<Utc>) -> Result<bool, String> {
    let task = s
        .next_task(annotator, Some(Protocol::Grounded), at)
        .map_err(|e| e.to_string())?
        .ok_or("no task available")?;
    let test = task.document.id.starts_with("gold");
    let mut record = sim::answer(annotator, &task.document, task.protocol, false);
    if test {
        for target in record.links.values_mut().take(wrong) {
            *target = LinkTarget::NoReference;
        }
    }
    match s.submit(record, at + Duration::seconds(60)).map_err(|e| e.to_string())? {
        SubmissionOutcome::Accepted { .. } => Ok(test),
        other => Err(format!("submission not accepted: {other:?}")),
    }
}

fn protocol_constants() -> Result<String, String> {
    let config = ServiceConfig::default();
    ensure(config.gating_threshold == 0.9 && config.time_limit_secs == 600.0 && config.test_interval == 5, || {
        format!("unexpected defaults: {config:?}")
    })?;

    for (wrong, score, stays_active) in [(2, 0.90, false), (1, 0.95, true)] {
        let mut s = protocol_service()?;
        for k in 0..5 {
            work(&mut s, "a", wrong, t0() + Duration::seconds(100 * k))?;
        }
        let q = s.qualification("a").ok_or("no qualification state")?;
        let got = q.test_history.first().ok_or("no test scored")?.score;
        ensure(got == score, || format!("test scored {got}, wanted {score}"))?;
        ensure(q.active == stays_active, || format!("score {score}: active = {}", q.active))?;
        if !stays_active {
            let refused = s.next_task("a", None, t0() + Duration::seconds(1000));
            ensure(matches!(refused, Err(ServiceError::Inactive(_))), || format!("deactivated annotator got {refused:?}"))?;
        }
    }

    let mut s = protocol_service()?;
    let mut positions = Vec::new();
    for k in 1..=15 {
        if work(&mut s, "b", 0, t0() + Duration::seconds(100 * k))? {
            positions.push(k);
        }
    }
    ensure(positions == [5, 10, 15], || format!("tests at positions {positions:?}"))?;

    let mut s = protocol_service()?;
    let task = s.next_task("c", None, t0()).map_err(|e| e.to_string())?.ok_or("no task")?;
    ensure(task.deadline == t0() + Duration::seconds(600), || format!("deadline {}", task.deadline))?;
    let late = s.submit(sim::answer("c", &task.document, task.protocol, false), t0() + Duration::seconds(601));
    ensure(matches!(late, Ok(SubmissionOutcome::Rejected { .. })), || format!("601 s submission gave {late:?}"))?;
    let task = s.next_task("d", None, t0()).map_err(|e| e.to_string())?.ok_or("no task")?;
    let on_time = s.submit(sim::answer("d", &task.document, task.protocol, false), t0() + Duration::seconds(600));
    ensure(matches!(on_time, Ok(SubmissionOutcome::Accepted { .. })), || format!("600 s submission gave {on_time:?}"))?;

    ensure(MIN_PRONOUNS == 5, || format!("admission threshold is {MIN_PRONOUNS}"))?;
    let lexicon = PronounLexicon::default();
    for (pronouns, admitted) in [(4, false), (5, true)] {
        let page = RawPage::wiki("p", "P", format!("<p>{}</p>", "Ann said she ran. ".repeat(pronouns)));
        let doc = build_wiki_document(&page, &lexicon).map_err(|e| e.to_string())?;
        ensure(doc.markables.len() == pronouns, || format!("{} markables, wanted {pronouns}", doc.markables.len()))?;
        ensure(admit_document(&doc) == admitted, || format!("{pronouns} pronouns: admitted = {}", !admitted))?;
    }
    Ok("0.90 deactivates, 0.95 continues; tests at 5/10/15; 601 s rejected, 600 s accepted; 4 pronouns refused, 5 admitted".into())
}

fn plan_convergence() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let report = sim::run(dir.path());
    ensure(report.problems.is_empty(), || report.problems.join("; "))?;
    ensure(report.documents == 200, || format!("{} documents", report.documents))?;
    ensure(report.records == report.expected_records, || {
        format!("{} records, wanted {}", report.records, report.expected_records)
    })?;
    Ok(format!(
        "{} documents, {} records, restart after {} records without loss",
        report.documents, report.records, report.restarted_with
    ))
}

fn ingest_fixtures() -> Result<String, String> {
    let results = fixtures::check_all();
    let pages = results.iter().filter(|(id, _)| id.starts_with('p')).count();
    ensure(pages >= MIN_FIXTURE_PAGES, || format!("only {pages} fixture pages"))?;
    let failures: Vec<String> =
        results.iter().filter_map(|(id, r)| r.as_ref().err().map(|e| format!("{id}: {e}"))).collect();
    ensure(failures.is_empty(), || failures.join("; "))?;
    Ok(format!("{} fixtures ({pages} pages) byte-exact with sound offsets", results.len()))
}

fn conversion() -> Result<String, String> {
    let doc = document_from(
        "all",
        "Harry Potter, and his friends Hermione Granger and Ron Weasley, all went home.",
        &[("hp", "Harry Potter"), ("hg", "Hermione Granger"), ("rw", "Ron Weasley")],
    );
    let mut record = AnnotationRecord::new("a", "all", Protocol::Grounded, t0(), t0());
    let mut all = None;
    for m in &doc.markables {
        let target = if m.surface == "all" {
            all = Some(m.id.clone());
            LinkTarget::entities(["hp", "hg", "rw"])
        } else {
            LinkTarget::entities(["hp"])
        };
        record.links.insert(m.id.clone(), target);
    }
    let all = all.ok_or("\"all\" is not a markable")?;
    let report = grounded_to_clusters(&doc, &record).map_err(|e| e.to_string())?;
    ensure(report.dropped_multi_entity == [all.clone()], || format!("dropped {:?}", report.dropped_multi_entity))?;
    report.clusters.validate().map_err(|e| format!("clusters not disjoint: {e}"))?;
    let m = doc.markable(&all).ok_or("markable lookup")?;
    ensure(
        !report.clusters.clusters.iter().flatten().any(|x| (x.char_start, x.char_end) == m.span),
        || "\"all\" appears in a cluster".into(),
    )?;

    let text = "Harry Potter is a global phenomenon. It has captured readers.";
    let doc = document_from("hp", text, &[("e0", "Harry Potter")]);
    let mut record = AnnotationRecord::new("a", "hp", Protocol::Grounded, t0(), t0());
    for m in &doc.markables {
        record.links.insert(m.id.clone(), LinkTarget::entities(["e0"]));
    }
    let report = grounded_to_clusters(&doc, &record).map_err(|e| e.to_string())?;
    let want = vec![vec![MentionId::new("hp", 0, 0, 12), MentionId::new("hp", 0, 37, 39)]];
    ensure(report.clusters.normalized() == want, || format!("clusters {:?}", report.clusters.normalized()))?;
    Ok("\"all\" dropped with disjoint clusters; \"Harry Potter ... It\" forms one 2-mention cluster".into())
}

fn round_trips() -> Result<String, String> {
    let mut rng = StdRng::seed_from_u64(0x2012);
    let mut mentions = 0;
    for case in 0..ROUND_TRIPS {
        let docs: Vec<Document> = (0..3).map(|i| gen::document(&mut rng, &format!("d{case}-{i}"))).collect();
        let mut records = Vec::new();
        for d in &docs {
            for (annotator, protocol) in [("a", Protocol::Grounded), ("b", Protocol::Span)] {
                records.push(gen::record(&mut rng, d, annotator, protocol));
            }
        }
        let corpus = CorpusFile { records, ..CorpusFile::new(docs.clone()) };
        let bytes = write_corpus(&corpus).map_err(|e| e.to_string())?;
        let back = read_corpus(&bytes).map_err(|e| format!("case {case}: {e}"))?;
        ensure(back == corpus, || format!("case {case}: corpus changed on round trip"))?;

        let doc = &docs[0];
        let clusters = gen::token_clusters(&mut rng, doc);
        mentions += clusters.mention_count();
        let text = to_conll(doc, &clusters).map_err(|e| format!("case {case}: {e}"))?.to_string();
        let parsed = from_conll(&text).map_err(|e| format!("case {case}: {e}"))?;
        ensure(parsed.len() == 1, || format!("case {case}: {} documents parsed", parsed.len()))?;
        let again = parsed[0].to_mentions(doc).map_err(|e| format!("case {case}: {e}"))?;
        ensure(again.normalized() == clusters.normalized(), || format!("case {case}: clusters changed:\n{text}"))?;
    }
    Ok(format!("{ROUND_TRIPS} corpus files and {ROUND_TRIPS} CoNLL documents ({mentions} mentions)"))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("metric oracle equivalence", metric_oracles),
        ("CEAF alignment optimality", assignment_optimality),
        ("scorer identity and duality", identity_and_duality),
        ("agreement properties", agreement_properties),
        ("protocol constants", protocol_constants),
        ("assignment plan convergence", plan_convergence),
        ("ingest fixtures", ingest_fixtures),
        ("grounded conversion", conversion),
        ("corpus and CoNLL round trips", round_trips),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
