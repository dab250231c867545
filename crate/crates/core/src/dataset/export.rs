//! CoNLL export of a corpus: one file per grounded record, plus a sidecar
//! listing what the lossy conversion could not represent.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::conll::to_conll;
use super::corpus::CorpusFile;
use crate::model::{LinkTarget, Protocol};
use crate::scoring::grounded_to_clusters;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedMention {
    pub markable_id: String,
    pub section_index: usize,
    pub span: (usize, usize),
    pub surface: String,
    pub entity_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub document_id: String,
    pub annotator_id: String,
    pub dropped_multi_entity: Vec<DroppedMention>,
    pub unmatched_aliases: Vec<(String, String)>,
    /// The annotator later failed a qualification test.
    pub flagged: bool,
    /// Why no CoNLL file could be written for this record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConllExport {
    /// `<document>__<annotator>`; the CoNLL file is `<stem>.conll`, the
    /// sidecar `<stem>.dropped.json`.
    pub file_stem: String,
    pub conll: Option<String>,
    pub sidecar: Sidecar,
}

/// Export every complete grounded record. A record whose clusters cannot
/// be written keeps its sidecar, with the reason in `error`.
pub fn conll_exports(corpus: &CorpusFile) -> Vec<ConllExport> {
    let flagged: BTreeSet<&str> =
        corpus.flagged_annotators.iter().flatten().map(String::as_str).collect();
    corpus
        .records
        .iter()
        .filter(|r| r.protocol == Protocol::Grounded && r.complete)
        .filter_map(|record| {
            let doc = corpus.document(&record.document_id)?;
            let mut sidecar = Sidecar {
                document_id: doc.id.clone(),
                annotator_id: record.annotator_id.clone(),
                dropped_multi_entity: Vec::new(),
                unmatched_aliases: Vec::new(),
                flagged: flagged.contains(record.annotator_id.as_str()),
                error: None,
            };
            let conll = match grounded_to_clusters(doc, record) {
                Ok(report) => {
                    sidecar.dropped_multi_entity = report
                        .dropped_multi_entity
                        .iter()
                        .filter_map(|id| {
                            let m = doc.markable(id)?;
                            let entity_ids = match record.links.get(id) {
                                Some(LinkTarget::EntitySet { entity_ids }) => entity_ids.clone(),
                                _ => BTreeSet::new(),
                            };
                            Some(DroppedMention {
                                markable_id: id.clone(),
                                section_index: m.section_index,
                                span: m.span,
                                surface: m.surface.clone(),
                                entity_ids,
                            })
                        })
                        .collect();
                    sidecar.unmatched_aliases = report.unmatched_aliases;
                    match to_conll(doc, &report.clusters) {
                        Ok(c) => Some(c.to_string()),
                        Err(e) => {
                            sidecar.error = Some(e.to_string());
                            None
                        }
                    }
                }
                Err(e) => {
                    sidecar.error = Some(e.to_string());
                    None
                }
            };
            Some(ConllExport { file_stem: format!("{}__{}", doc.id, record.annotator_id), conll, sidecar })
        })
        .collect()
}
