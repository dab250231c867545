//! The platform's corpus file: documents, annotation records and optional
//! conversion reports, serialized as canonical JSON (fixed field order,
//! sorted map keys, two-space indent, trailing newline).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::model::{AnnotationRecord, Document, LinkTarget};
use crate::scoring::ConversionReport;

pub const CORPUS_VERSION: &str = "1";

/// A conversion report tied to the record it was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredConversion {
    pub document_id: String,
    pub annotator_id: String,
    pub report: ConversionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusFile {
    pub version: String,
    pub documents: Vec<Document>,
    pub records: Vec<AnnotationRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conversion_reports: Option<Vec<StoredConversion>>,
    /// Annotators deactivated by a failed qualification test after some of
    /// their records were accepted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flagged_annotators: Option<Vec<String>>,
}

impl Default for CorpusFile {
    fn default() -> Self {
        CorpusFile {
            version: CORPUS_VERSION.to_string(),
            documents: Vec::new(),
            records: Vec::new(),
            conversion_reports: None,
            flagged_annotators: None,
        }
    }
}

impl CorpusFile {
    pub fn new(documents: Vec<Document>) -> Self {
        CorpusFile { documents, ..Default::default() }
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// Every record resolves to a document and every linked entity resolves
    /// to that document's inventory or the record's added entities.
    pub fn check_integrity(&self) -> Result<(), DatasetError> {
        let integrity = |location: String, message: String| DatasetError::Integrity { location, message };
        let mut docs: HashMap<&str, &Document> = HashMap::new();
        for (i, doc) in self.documents.iter().enumerate() {
            if docs.insert(doc.id.as_str(), doc).is_some() {
                return Err(integrity(format!("documents[{i}].id"), format!("duplicate document id {:?}", doc.id)));
            }
        }
        for (i, record) in self.records.iter().enumerate() {
            let Some(doc) = docs.get(record.document_id.as_str()) else {
                return Err(integrity(
                    format!("records[{i}].document_id"),
                    format!("unknown document {:?}", record.document_id),
                ));
            };
            for (markable_id, target) in &record.links {
                if doc.markable(markable_id).is_none() {
                    return Err(integrity(
                        format!("records[{i}].links.{markable_id}"),
                        format!("unknown markable {markable_id:?} in document {:?}", doc.id),
                    ));
                }
                if let LinkTarget::EntitySet { entity_ids } = target {
                    for entity_id in entity_ids {
                        let known = doc.entity(entity_id).is_some()
                            || record.added_entities.iter().any(|e| &e.id == entity_id);
                        if !known {
                            return Err(integrity(
                                format!("records[{i}].links.{markable_id}"),
                                format!("unknown entity {entity_id:?}"),
                            ));
                        }
                    }
                }
            }
        }
        if let Some(reports) = &self.conversion_reports {
            for (i, r) in reports.iter().enumerate() {
                if !docs.contains_key(r.document_id.as_str()) {
                    return Err(integrity(
                        format!("conversion_reports[{i}].document_id"),
                        format!("unknown document {:?}", r.document_id),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Canonical bytes of a corpus. Integrity is checked first.
pub fn write_corpus(corpus: &CorpusFile) -> Result<Vec<u8>, DatasetError> {
    corpus.check_integrity()?;
    let mut bytes = serde_json::to_vec_pretty(corpus).expect("corpus serializes");
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn read_corpus(bytes: &[u8]) -> Result<CorpusFile, DatasetError> {
    let corpus: CorpusFile = serde_json::from_slice(bytes).map_err(|e| DatasetError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if corpus.version != CORPUS_VERSION {
        return Err(DatasetError::Version(corpus.version));
    }
    corpus.check_integrity()?;
    Ok(corpus)
}
