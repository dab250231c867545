//! Lossy conversion of grounded annotations into mention clusters.
//!
//! Each entity becomes a cluster holding the markables linked to it alone
//! plus the occurrences of its names in the document text. Markables
//! linked to several entities cannot live in a partition and are reported
//! instead; names that never occur are reported as unmatched aliases.

use serde::{Deserialize, Serialize};

use super::{ClusterSet, MentionId, ScoringError};
use crate::model::{AnnotationRecord, Document, Entity, LinkTarget, Protocol};
use crate::text::is_token_bounded;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionReport {
    pub clusters: ClusterSet<MentionId>,
    pub dropped_multi_entity: Vec<String>,
    /// `(entity_id, alias)` pairs that matched nowhere in the text.
    pub unmatched_aliases: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
struct NameMatch {
    entity: usize,
    alias: usize,
    section: usize,
    start: usize,
    end: usize,
}

/// An alias written entirely in lowercase must match case-sensitively, so
/// that aliases such as "it" do not capture "It".
fn find_occurrences(chars: &[char], lowered: &[char], alias: &str) -> Vec<(usize, usize)> {
    let case_sensitive = !alias.chars().any(char::is_uppercase);
    let needle: Vec<char> = if case_sensitive {
        alias.chars().collect()
    } else {
        alias.chars().flat_map(char::to_lowercase).collect()
    };
    let haystack = if case_sensitive { chars } else { lowered };
    if needle.is_empty() || needle.len() > haystack.len() {
        return Vec::new();
    }
    (0..=haystack.len() - needle.len())
        .filter(|&i| haystack[i..i + needle.len()] == needle[..])
        .map(|i| (i, i + needle.len()))
        .filter(|&(s, e)| is_token_bounded(chars, s, e))
        .collect()
}

fn alias_list(entity: &Entity) -> Vec<String> {
    let mut aliases = vec![entity.canonical_name.clone()];
    for a in &entity.aliases {
        if !a.trim().is_empty() && !aliases.contains(a) {
            aliases.push(a.clone());
        }
    }
    aliases
}

/// Convert a complete grounded record into clusters.
///
/// Name matches are token-bounded and chosen longest first, ties going to
/// the earlier offset and then to the earlier entity; matches that overlap
/// a markable or an already chosen match are discarded.
pub fn grounded_to_clusters(doc: &Document, record: &AnnotationRecord) -> Result<ConversionReport, ScoringError> {
    if record.protocol != Protocol::Grounded || !record.complete {
        return Err(ScoringError::NotGrounded);
    }
    if record.document_id != doc.id {
        return Err(ScoringError::DocumentMismatch {
            expected: doc.id.clone(),
            found: record.document_id.clone(),
        });
    }

    let entities: Vec<&Entity> = doc.entities.iter().chain(&record.added_entities).collect();
    let aliases: Vec<Vec<String>> = entities.iter().map(|e| alias_list(e)).collect();

    let mut candidates = Vec::new();
    for section in &doc.sections {
        let chars: Vec<char> = section.text.chars().collect();
        // Lowercasing may change length for a few scripts; fall back to
        // case-sensitive search there so offsets stay aligned.
        let lowered: Vec<char> = chars.iter().map(|c| {
            let mut l = c.to_lowercase();
            match (l.next(), l.next()) {
                (Some(x), None) => x,
                _ => *c,
            }
        }).collect();
        for (ei, names) in aliases.iter().enumerate() {
            for (ai, alias) in names.iter().enumerate() {
                for (start, end) in find_occurrences(&chars, &lowered, alias) {
                    candidates.push(NameMatch { entity: ei, alias: ai, section: section.index, start, end });
                }
            }
        }
    }
    candidates.sort_by_key(|c| (std::cmp::Reverse(c.end - c.start), c.section, c.start, c.entity, c.alias));

    let overlaps = |section: usize, start: usize, end: usize, other: (usize, usize, usize)| {
        section == other.0 && start < other.2 && other.1 < end
    };
    let markable_spans: Vec<(usize, usize, usize)> =
        doc.markables.iter().map(|m| (m.section_index, m.span.0, m.span.1)).collect();
    let mut accepted: Vec<NameMatch> = Vec::new();
    for c in candidates {
        let blocked = markable_spans.iter().any(|&m| overlaps(c.section, c.start, c.end, m))
            || accepted.iter().any(|a| overlaps(c.section, c.start, c.end, (a.section, a.start, a.end)));
        if !blocked {
            accepted.push(c);
        }
    }

    let mut members: Vec<Vec<MentionId>> = vec![Vec::new(); entities.len()];
    let mut matched_alias = vec![Vec::new(); entities.len()];
    for (ei, names) in aliases.iter().enumerate() {
        matched_alias[ei] = vec![false; names.len()];
    }
    for a in &accepted {
        matched_alias[a.entity][a.alias] = true;
        members[a.entity].push(MentionId::new(&doc.id, a.section, a.start, a.end));
    }

    let mut dropped_multi_entity = Vec::new();
    for markable in &doc.markables {
        let Some(LinkTarget::EntitySet { entity_ids }) = record.links.get(&markable.id) else {
            continue;
        };
        if entity_ids.len() >= 2 {
            dropped_multi_entity.push(markable.id.clone());
            continue;
        }
        let Some(target) = entity_ids.iter().next() else {
            continue;
        };
        if let Some(ei) = entities.iter().position(|e| &e.id == target) {
            members[ei].push(MentionId::new(&doc.id, markable.section_index, markable.span.0, markable.span.1));
        }
    }

    let clusters = members
        .into_iter()
        .filter(|c| !c.is_empty())
        .map(|mut c| {
            c.sort();
            c
        })
        .collect();

    let unmatched_aliases = entities
        .iter()
        .zip(&aliases)
        .zip(&matched_alias)
        .flat_map(|((e, names), hit)| {
            names
                .iter()
                .zip(hit)
                .filter(|(_, h)| !**h)
                .map(|(n, _)| (e.id.clone(), n.clone()))
        })
        .collect();

    Ok(ConversionReport { clusters: ClusterSet::new(clusters), dropped_multi_entity, unmatched_aliases })
}
