//! Seeded generators for random test instances.

use chrono::{Duration, TimeZone, Utc};
use rand::rngs::StdRng;
use rand::Rng;

use groundcoref::text::conll_tokens;
use groundcoref::{
    detect_markables, AnnotationRecord, ClusterSet, Document, Entity, LinkTarget, MentionId, Protocol,
    PronounLexicon, Provenance, Section, SectionKind, Source, Span,
};

use super::oracle::Partition;

const WORDS: &[&str] = &[
    "Harry", "Potter", "Ron", "Hermione", "Granger", "he", "she", "it", "they", "them", "his", "her",
    "its", "all", "who", "which", "that", "each other", "ran", "saw", "the", "castle", "wand", "book",
    "Zoë", "東京", "café", "won't", ",", ".", "'s", "(", ")", "—", "it's", "one another", "nobody",
];

const NAMES: &[&str] = &["Harry Potter", "Hermione Granger", "Ron", "the castle", "Zoë", "東京"];

/// A random mention partition over a random subset of `0..n`.
pub fn partition(rng: &mut StdRng, n: u32, max_clusters: usize) -> Partition {
    let k = rng.random_range(1..=max_clusters);
    let mut p = vec![Vec::new(); k];
    for m in 0..n {
        if rng.random_bool(0.85) {
            p[rng.random_range(0..k)].push(m);
        }
    }
    p.retain(|c| !c.is_empty());
    p
}

fn text(rng: &mut StdRng, max_words: usize) -> String {
    let n = rng.random_range(1..=max_words);
    let mut s = String::new();
    for _ in 0..n {
        let w = WORDS[rng.random_range(0..WORDS.len())];
        let attach = matches!(w, "," | "." | "'s" | ")");
        if !s.is_empty() && !attach {
            s.push(' ');
        }
        s.push_str(w);
    }
    s
}

/// A document of at most 50 words over one to three sections.
pub fn document(rng: &mut StdRng, id: &str) -> Document {
    let source = if rng.random_bool(0.5) { Source::Wiki } else { Source::Quac };
    let sections: Vec<Section> = match source {
        Source::Wiki => vec![Section { index: 0, kind: SectionKind::Summary, text: text(rng, 45) }],
        Source::Quac => {
            let kinds = [SectionKind::Context, SectionKind::Question, SectionKind::Answer];
            kinds
                .iter()
                .enumerate()
                .map(|(index, &kind)| Section { index, kind, text: text(rng, 15) })
                .collect()
        }
    };
    let markables = detect_markables(&sections, &PronounLexicon::default());
    let entities = (0..rng.random_range(0..4))
        .map(|i| {
            let name = NAMES[rng.random_range(0..NAMES.len())];
            Entity {
                id: format!("e{i}"),
                canonical_name: name.to_string(),
                aliases: vec![name.to_string()],
                provenance: Provenance::Wikilink,
                target: Some(format!("/wiki/{}", name.replace(' ', "_"))),
            }
        })
        .collect();
    Document { id: id.to_string(), source, title: id.to_uppercase(), sections, markables, entities }
}

fn random_span(rng: &mut StdRng, doc: &Document) -> Span {
    let s = &doc.sections[rng.random_range(0..doc.sections.len())];
    let len = s.text.chars().count().max(1);
    let start = rng.random_range(0..len);
    let end = rng.random_range(start + 1..=len.min(start + 12));
    Span::new(s.index, start, end)
}

/// A complete record linking every markable at random.
pub fn record(rng: &mut StdRng, doc: &Document, annotator: &str, protocol: Protocol) -> AnnotationRecord {
    let t0 = Utc.with_ymd_and_hms(2022, 5, 1, 12, 0, 0).unwrap() + Duration::seconds(rng.random_range(0..100_000));
    let t1 = t0 + Duration::milliseconds(rng.random_range(1_000..600_000));
    let mut r = AnnotationRecord::new(annotator, &doc.id, protocol, t0, t1);
    for m in &doc.markables {
        let target = if rng.random_bool(0.25) || (protocol == Protocol::Grounded && doc.entities.is_empty()) {
            LinkTarget::NoReference
        } else {
            match protocol {
                Protocol::Grounded => {
                    let k = rng.random_range(1..=doc.entities.len().min(3));
                    LinkTarget::entities((0..k).map(|_| doc.entities[rng.random_range(0..doc.entities.len())].id.clone()))
                }
                Protocol::Span => LinkTarget::spans((0..rng.random_range(1..=3)).map(|_| random_span(rng, doc))),
            }
        };
        r.links.insert(m.id.clone(), target);
    }
    r
}

/// Mutate a copy of `r`, relinking each markable with probability `p`.
pub fn perturb(rng: &mut StdRng, doc: &Document, r: &AnnotationRecord, p: f64, annotator: &str) -> AnnotationRecord {
    let fresh = record(rng, doc, annotator, r.protocol);
    let mut out = r.clone();
    out.annotator_id = annotator.to_string();
    for (id, target) in fresh.links {
        if rng.random_bool(p) {
            out.links.insert(id, target);
        }
    }
    out
}

/// Token-aligned, non-crossing mention clusters (at most five).
pub fn token_clusters(rng: &mut StdRng, doc: &Document) -> ClusterSet<MentionId> {
    let k = rng.random_range(1..=5);
    let mut clusters: Vec<Vec<MentionId>> = vec![Vec::new(); k];
    // (section, first token, last token)
    let mut taken: Vec<(usize, usize, usize)> = Vec::new();
    for _ in 0..rng.random_range(0..10) {
        let si = rng.random_range(0..doc.sections.len());
        let chars: Vec<char> = doc.sections[si].text.chars().collect();
        let tokens = conll_tokens(&chars);
        if tokens.is_empty() {
            continue;
        }
        let a = rng.random_range(0..tokens.len());
        let b = (a + rng.random_range(0..3)).min(tokens.len() - 1);
        let clash = taken.iter().any(|&(s, x, y)| {
            s == si && ((x, y) == (a, b) || (x < a && a <= y && y < b) || (a < x && x <= b && b < y))
        });
        if clash {
            continue;
        }
        taken.push((si, a, b));
        clusters[rng.random_range(0..k)].push(MentionId::new(&doc.id, doc.sections[si].index, tokens[a].start, tokens[b].end));
    }
    clusters.retain(|c| !c.is_empty());
    ClusterSet::new(clusters)
}
