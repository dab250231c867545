//! The hand-built ingest fixture corpus under `tests/fixtures/ingest`.

use std::path::PathBuf;

use serde::Deserialize;

use groundcoref::ingest::{ingest_quac, ingest_wiki, load_pages, load_quac_records, MarkableScope, SkipReason};
use groundcoref::text::char_slice;
use groundcoref::{admit_document, build_quac_document, build_wiki_document, Document, PronounLexicon};

#[derive(Deserialize)]
struct Skipped {
    malformed: usize,
    non_article: usize,
}

#[derive(Deserialize)]
struct Entry {
    id: String,
    kind: String,
    admitted: bool,
    skipped: Skipped,
}

pub fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ingest")
}

/// Character offsets of every markable select its surface.
pub fn offset_violations(doc: &Document) -> Vec<String> {
    doc.markables
        .iter()
        .filter(|m| {
            doc.section(m.section_index).and_then(|s| char_slice(&s.text, m.span.0, m.span.1)) != Some(m.surface.as_str())
        })
        .map(|m| format!("{}/{}", doc.id, m.id))
        .collect()
}

/// One line per fixture: its id and, on failure, what differed.
pub fn check_all() -> Vec<(String, Result<(), String>)> {
    let lexicon = PronounLexicon::default();
    let pages = load_pages(&dir().join("pages")).expect("fixture pages");
    let records = load_quac_records(&dir().join("quac.json")).expect("fixture records");
    let manifest: Vec<Entry> =
        serde_json::from_slice(&std::fs::read(dir().join("manifest.json")).unwrap()).unwrap();

    let (admitted_wiki, wiki_report) = ingest_wiki(&pages, &lexicon);
    let (admitted_quac, _) = ingest_quac(&records, &pages, &lexicon, MarkableScope::AllSections);

    manifest
        .iter()
        .map(|entry| {
            let result = (|| {
                let doc = match entry.kind.as_str() {
                    "wiki" => {
                        let page = pages.iter().find(|p| p.page_id == entry.id).ok_or("page missing")?;
                        build_wiki_document(page, &lexicon).map_err(|e| e.to_string())?
                    }
                    _ => {
                        let rec = records.iter().find(|r| r.id == entry.id).ok_or("record missing")?;
                        let page = pages.iter().find(|p| p.page_id == rec.wiki_page_id);
                        build_quac_document(rec, page, &lexicon).map_err(|e| e.to_string())?
                    }
                };
                let actual = serde_json::to_string_pretty(&doc).unwrap() + "\n";
                let expected = std::fs::read_to_string(dir().join("expected").join(format!("{}.json", entry.id)))
                    .map_err(|e| e.to_string())?;
                if actual != expected {
                    return Err(format!("document differs from expected:\n{actual}"));
                }
                if admit_document(&doc) != entry.admitted {
                    return Err(format!("admission should be {}", entry.admitted));
                }
                let listed = admitted_wiki.iter().chain(&admitted_quac).any(|d| d.id == entry.id);
                if listed != entry.admitted {
                    return Err("batch ingest disagrees on admission".into());
                }
                if entry.kind == "wiki" {
                    let count = |reason| {
                        wiki_report.entries.iter().filter(|e| e.page_id == entry.id && e.reason == reason).count()
                    };
                    let got = (count(SkipReason::MalformedLink), count(SkipReason::NonArticleLink));
                    if got != (entry.skipped.malformed, entry.skipped.non_article) {
                        return Err(format!("skipped links (malformed, non-article) = {got:?}"));
                    }
                }
                let bad = offset_violations(&doc);
                if !bad.is_empty() {
                    return Err(format!("unsound offsets: {bad:?}"));
                }
                Ok(())
            })();
            (entry.id.clone(), result)
        })
        .collect()
}
