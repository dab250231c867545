#![allow(dead_code)]

use chrono::{DateTime, TimeZone, Utc};

use groundcoref::service::GoldAnnotation;
use groundcoref::{
    detect_markables, AnnotationRecord, Document, Entity, LinkTarget, Protocol, PronounLexicon, Provenance, Section,
    SectionKind, Source, Span,
};

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 3, 1, 9, 0, 0).unwrap()
}

/// "Bob said he ran." repeated; every "he" is a markable.
pub fn document(id: &str, source: Source, repeats: usize) -> Document {
    let kind = if source == Source::Wiki { SectionKind::Summary } else { SectionKind::Context };
    let sections = vec![Section { index: 0, kind, text: "Bob said he ran. ".repeat(repeats).trim_end().to_string() }];
    let markables = detect_markables(&sections, &PronounLexicon::default());
    Document {
        id: id.into(),
        source,
        title: id.into(),
        sections,
        markables,
        entities: vec![Entity {
            id: "e0".into(),
            canonical_name: "Bob".into(),
            aliases: vec!["Bob".into()],
            provenance: Provenance::Wikilink,
            target: Some("/wiki/Bob".into()),
        }],
    }
}

/// Every markable linked to Bob (or to the first three characters).
pub fn answer(annotator: &str, doc: &Document, protocol: Protocol) -> AnnotationRecord {
    let mut r = AnnotationRecord::new(annotator, &doc.id, protocol, t0(), t0());
    for m in &doc.markables {
        let target = match protocol {
            Protocol::Grounded => LinkTarget::entities(["e0"]),
            Protocol::Span => LinkTarget::spans([Span::new(0, 0, 3)]),
        };
        r.links.insert(m.id.clone(), target);
    }
    r
}

pub fn gold_pool(n: usize) -> Vec<GoldAnnotation> {
    (0..n)
        .flat_map(|i| {
            let d = document(&format!("gold-{i}"), Source::Wiki, 10);
            Protocol::ALL.map(|p| GoldAnnotation { record: answer("expert", &d, p), document: d.clone() })
        })
        .collect()
}
