use serde::{Deserialize, Serialize};

use crate::model::{Document, Source};

/// Which documents of one source are annotated twice and which once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcePlan {
    pub source: Source,
    pub doubly_annotated: Vec<String>,
    pub singly_annotated: Vec<String>,
}

/// The same split applies to each protocol independently.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignmentPlan {
    pub sources: Vec<SourcePlan>,
}

impl AssignmentPlan {
    /// Per source, the first `doubly` documents in corpus order are doubly
    /// annotated and the next `singly` singly annotated; the rest are unplanned.
    pub fn build(documents: &[Document], doubly: usize, singly: usize) -> Self {
        let sources = Source::ALL
            .iter()
            .map(|&source| {
                let ids: Vec<String> =
                    documents.iter().filter(|d| d.source == source).map(|d| d.id.clone()).collect();
                let split = doubly.min(ids.len());
                let end = (split + singly).min(ids.len());
                SourcePlan {
                    source,
                    doubly_annotated: ids[..split].to_vec(),
                    singly_annotated: ids[split..end].to_vec(),
                }
            })
            .collect();
        AssignmentPlan { sources }
    }

    /// Records wanted per protocol; 0 for unplanned documents.
    pub fn target(&self, document_id: &str) -> usize {
        self.slots().find(|(id, _)| *id == document_id).map_or(0, |(_, t)| t)
    }

    pub fn slots(&self) -> impl Iterator<Item = (&str, usize)> {
        self.sources.iter().flat_map(|s| {
            s.doubly_annotated
                .iter()
                .map(|d| (d.as_str(), 2))
                .chain(s.singly_annotated.iter().map(|d| (d.as_str(), 1)))
        })
    }

    pub fn doubly_annotated(&self) -> impl Iterator<Item = (Source, &str)> {
        self.sources.iter().flat_map(|s| s.doubly_annotated.iter().map(move |d| (s.source, d.as_str())))
    }
}
