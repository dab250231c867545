//! Seeded input generators shared by the benchmarks.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use groundcoref::{
    build_wiki_document, AnnotationRecord, ClusterSet, Document, LinkTarget, Protocol, PronounLexicon, RawPage,
    Span,
};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// `mentions` mentions spread uniformly over `clusters` clusters.
pub fn partition(rng: &mut StdRng, mentions: u32, clusters: usize) -> ClusterSet<u32> {
    let mut out = vec![Vec::new(); clusters];
    for m in 0..mentions {
        out[rng.random_range(0..clusters)].push(m);
    }
    out.retain(|c| !c.is_empty());
    ClusterSet::new(out)
}

/// Move each mention to a random cluster with probability `rate`.
pub fn perturb(rng: &mut StdRng, key: &ClusterSet<u32>, rate: f64) -> ClusterSet<u32> {
    let mut out = key.clusters.clone();
    let n = out.len();
    let mut moved = Vec::new();
    for c in &mut out {
        c.retain(|&m| {
            let keep = !rng.random_bool(rate);
            if !keep {
                moved.push(m);
            }
            keep
        });
    }
    for m in moved {
        out[rng.random_range(0..n)].push(m);
    }
    out.retain(|c| !c.is_empty());
    ClusterSet::new(out)
}

pub fn similarity_matrix(rng: &mut StdRng, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect()
}

const SUBJECTS: &[&str] = &["Ada Lovelace", "Charles Babbage", "the Engine", "London", "the Society"];
const PRONOUNS: &[&str] = &["She", "He", "It", "They", "her", "his", "them", "its", "who", "which"];

/// A wiki page whose lead has `paragraphs` paragraphs of linked prose.
pub fn page(rng: &mut StdRng, id: &str, paragraphs: usize) -> RawPage {
    let mut markup = String::new();
    for _ in 0..paragraphs {
        markup.push_str("<p>");
        for _ in 0..6 {
            let subject = SUBJECTS[rng.random_range(0..SUBJECTS.len())];
            let pronoun = PRONOUNS[rng.random_range(0..PRONOUNS.len())];
            let href = subject.trim_start_matches("the ").replace(' ', "_");
            markup.push_str(&format!(
                "<a href=\"/wiki/{href}\">{subject}</a> met {pronoun} friend.<sup class=\"reference\">[1]</sup> "
            ));
        }
        markup.push_str("</p>\n");
    }
    markup.push_str("<h2>History</h2><p>Later text.</p>");
    RawPage::wiki(id, id, markup)
}

pub fn document(rng: &mut StdRng, paragraphs: usize) -> Document {
    build_wiki_document(&page(rng, "bench", paragraphs), &PronounLexicon::default()).expect("generated page ingests")
}

/// A complete record for `doc` linking markables at random.
pub fn record(rng: &mut StdRng, doc: &Document, annotator: &str, protocol: Protocol) -> AnnotationRecord {
    let mut r = AnnotationRecord::new(annotator, &doc.id, protocol, Default::default(), Default::default());
    let mut ids: Vec<&str> = doc.entities.iter().map(|e| e.id.as_str()).collect();
    let text_len = doc.sections[0].text.chars().count();
    for m in &doc.markables {
        let target = match protocol {
            _ if rng.random_bool(0.1) => LinkTarget::NoReference,
            Protocol::Grounded => {
                ids.shuffle(rng);
                LinkTarget::entities(ids.iter().take(rng.random_range(1..=2)).copied())
            }
            Protocol::Span => {
                let start = rng.random_range(0..text_len - 10);
                LinkTarget::spans([Span::new(0, start, start + rng.random_range(1..10))])
            }
        };
        r.links.insert(m.id.clone(), target);
    }
    r
}
