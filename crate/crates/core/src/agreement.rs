//! Inter-annotator agreement between two complete records of one document.
//!
//! Two measures are computed over the document's markables:
//!
//! - exact match: the fraction of markables whose link targets are
//!   equivalent (equal entity sets, equal span sets, or both no-reference);
//! - link F1: micro-averaged F1 over (markable, item) pairs. Items are
//!   entity ids, spans, or a single no-reference item. Two spans are the
//!   same item when their character intervals overlap; spans are paired by
//!   maximum matching so the count stays symmetric.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AnnotationRecord, LinkTarget, Protocol, Source, Span};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AgreementError {
    #[error("records annotate different documents ({0} vs {1})")]
    DocumentMismatch(String, String),
    #[error("records use different protocols")]
    ProtocolMismatch,
    #[error("record by {0} is not complete")]
    Incomplete(String),
    #[error("markable {0} is linked in only one record")]
    MarkableMismatch(String),
    #[error("records have no markables")]
    NoMarkables,
}

/// Item counts for one markable, `a` as reference and `b` as candidate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemCounts {
    pub true_positive: usize,
    pub reference_only: usize,
    pub candidate_only: usize,
}

impl ItemCounts {
    fn add(&mut self, other: ItemCounts) {
        self.true_positive += other.true_positive;
        self.reference_only += other.reference_only;
        self.candidate_only += other.candidate_only;
    }

    pub fn precision(&self) -> f64 {
        ratio(self.true_positive, self.true_positive + self.candidate_only)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.true_positive, self.true_positive + self.reference_only)
    }

    /// `2tp / (2tp + fn + fp)`; symmetric in the two records.
    pub fn f1(&self) -> f64 {
        let tp2 = 2 * self.true_positive;
        ratio(tp2, tp2 + self.reference_only + self.candidate_only)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkableAgreement {
    pub markable_id: String,
    pub matched: bool,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub exact_match: f64,
    pub f1: f64,
    pub per_markable: Vec<MarkableAgreement>,
}

fn distinct_spans(spans: &[Span]) -> Vec<Span> {
    spans.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
}

/// Whether two targets count as the same answer for exact match.
pub fn equivalent(a: &LinkTarget, b: &LinkTarget) -> bool {
    match (a, b) {
        (LinkTarget::EntitySet { entity_ids: x }, LinkTarget::EntitySet { entity_ids: y }) => x == y,
        (LinkTarget::SpanSet { spans: x }, LinkTarget::SpanSet { spans: y }) => {
            distinct_spans(x) == distinct_spans(y)
        }
        (LinkTarget::NoReference, LinkTarget::NoReference) => true,
        _ => false,
    }
}

fn item_count(t: &LinkTarget) -> usize {
    match t {
        LinkTarget::EntitySet { entity_ids } => entity_ids.len(),
        LinkTarget::SpanSet { spans } => distinct_spans(spans).len(),
        LinkTarget::NoReference => 1,
    }
}

/// Size of a maximum matching between `a` and `b` where spans are adjacent
/// when they overlap (augmenting paths).
fn overlap_matching(a: &[Span], b: &[Span]) -> usize {
    fn augment(i: usize, a: &[Span], b: &[Span], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for j in 0..b.len() {
            if seen[j] || !a[i].overlaps(&b[j]) {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, a, b, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }

    let mut owner = vec![None; b.len()];
    (0..a.len())
        .filter(|&i| augment(i, a, b, &mut vec![false; b.len()], &mut owner))
        .count()
}

/// Pair counts for one markable.
pub fn item_counts(a: &LinkTarget, b: &LinkTarget) -> ItemCounts {
    let true_positive = match (a, b) {
        (LinkTarget::EntitySet { entity_ids: x }, LinkTarget::EntitySet { entity_ids: y }) => {
            x.intersection(y).count()
        }
        (LinkTarget::SpanSet { spans: x }, LinkTarget::SpanSet { spans: y }) => {
            overlap_matching(&distinct_spans(x), &distinct_spans(y))
        }
        (LinkTarget::NoReference, LinkTarget::NoReference) => 1,
        _ => 0,
    };
    ItemCounts {
        true_positive,
        reference_only: item_count(a) - true_positive,
        candidate_only: item_count(b) - true_positive,
    }
}

/// Raw agreement counts for a record pair; the unit of corpus aggregation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairCounts {
    pub markables: usize,
    pub matched: usize,
    pub items: ItemCounts,
}

impl PairCounts {
    pub fn exact_match(&self) -> f64 {
        ratio(self.matched, self.markables)
    }

    pub fn f1(&self) -> f64 {
        self.items.f1()
    }
}

fn check_pair(a: &AnnotationRecord, b: &AnnotationRecord) -> Result<(), AgreementError> {
    if a.document_id != b.document_id {
        return Err(AgreementError::DocumentMismatch(a.document_id.clone(), b.document_id.clone()));
    }
    if a.protocol != b.protocol {
        return Err(AgreementError::ProtocolMismatch);
    }
    for r in [a, b] {
        if !r.complete {
            return Err(AgreementError::Incomplete(r.annotator_id.clone()));
        }
    }
    if let Some(id) = a
        .links
        .keys()
        .find(|k| !b.links.contains_key(*k))
        .or_else(|| b.links.keys().find(|k| !a.links.contains_key(*k)))
    {
        return Err(AgreementError::MarkableMismatch(id.clone()));
    }
    if a.links.is_empty() {
        return Err(AgreementError::NoMarkables);
    }
    Ok(())
}

/// Full agreement report, `a` as reference and `b` as candidate.
pub fn agreement_report(a: &AnnotationRecord, b: &AnnotationRecord) -> Result<AgreementReport, AgreementError> {
    let counts = pair_counts(a, b)?;
    let per_markable = a
        .links
        .iter()
        .map(|(id, ta)| {
            let tb = &b.links[id];
            let c = item_counts(ta, tb);
            MarkableAgreement {
                markable_id: id.clone(),
                matched: equivalent(ta, tb),
                precision: c.precision(),
                recall: c.recall(),
            }
        })
        .collect();
    Ok(AgreementReport { exact_match: counts.exact_match(), f1: counts.f1(), per_markable })
}

pub fn pair_counts(a: &AnnotationRecord, b: &AnnotationRecord) -> Result<PairCounts, AgreementError> {
    check_pair(a, b)?;
    let mut counts = PairCounts::default();
    for (id, ta) in &a.links {
        let tb = &b.links[id];
        counts.markables += 1;
        counts.matched += usize::from(equivalent(ta, tb));
        counts.items.add(item_counts(ta, tb));
    }
    Ok(counts)
}

/// Fraction of markables with equivalent targets.
pub fn exact_match(a: &AnnotationRecord, b: &AnnotationRecord) -> Result<f64, AgreementError> {
    pair_counts(a, b).map(|c| c.exact_match())
}

/// Micro-averaged pair F1.
pub fn link_f1(a: &AnnotationRecord, b: &AnnotationRecord) -> Result<f64, AgreementError> {
    pair_counts(a, b).map(|c| c.f1())
}

/// One row of the corpus agreement table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementCell {
    pub source: Source,
    pub protocol: Protocol,
    pub documents: usize,
    /// Pooled over all markables and items of the cell.
    pub exact_match: f64,
    pub f1: f64,
    /// Mean of per-document scores.
    pub exact_match_macro: f64,
    pub f1_macro: f64,
}

/// Accumulates record pairs per (source, protocol).
#[derive(Debug, Clone, Default)]
pub struct AgreementTable {
    cells: HashMap<(Source, Protocol), Vec<PairCounts>>,
}

impl AgreementTable {
    pub fn add(&mut self, source: Source, a: &AnnotationRecord, b: &AnnotationRecord) -> Result<(), AgreementError> {
        let counts = pair_counts(a, b)?;
        self.cells.entry((source, a.protocol)).or_default().push(counts);
        Ok(())
    }

    /// Rows in wiki/quac × grounded/span order; empty cells are omitted.
    pub fn rows(&self) -> Vec<AgreementCell> {
        let mut rows = Vec::new();
        for source in Source::ALL {
            for protocol in Protocol::ALL {
                let Some(pairs) = self.cells.get(&(source, protocol)) else {
                    continue;
                };
                let mut pooled = PairCounts::default();
                for p in pairs {
                    pooled.markables += p.markables;
                    pooled.matched += p.matched;
                    pooled.items.add(p.items);
                }
                let n = pairs.len() as f64;
                rows.push(AgreementCell {
                    source,
                    protocol,
                    documents: pairs.len(),
                    exact_match: pooled.exact_match(),
                    f1: pooled.f1(),
                    exact_match_macro: pairs.iter().map(PairCounts::exact_match).sum::<f64>() / n,
                    f1_macro: pairs.iter().map(PairCounts::f1).sum::<f64>() / n,
                });
            }
        }
        rows
    }
}
