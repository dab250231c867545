//! Coreference clusters and the MUC, B³ and CEAF-φ4 scorers.

pub mod assignment;
pub mod convert;
pub mod metrics;

use std::collections::HashSet;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use convert::{grounded_to_clusters, ConversionReport};
pub use metrics::{b_cubed, ceaf_e, macro_average, muc, score_all, CorefScores};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoringError {
    #[error("{side} clusters overlap: a mention appears in two clusters")]
    Overlap { side: &'static str },
    #[error("{side} contains an empty cluster")]
    EmptyCluster { side: &'static str },
    #[error("cannot average an empty list of scores")]
    EmptyAverage,
    #[error("conversion needs a complete grounded record")]
    NotGrounded,
    #[error("record is for document {found}, expected {expected}")]
    DocumentMismatch { expected: String, found: String },
}

/// Identity of a mention: a character span inside one document section.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(String, usize, usize, usize)", into = "(String, usize, usize, usize)")]
pub struct MentionId {
    pub document_id: String,
    pub section_index: usize,
    pub char_start: usize,
    pub char_end: usize,
}

impl MentionId {
    pub fn new(document_id: impl Into<String>, section_index: usize, char_start: usize, char_end: usize) -> Self {
        MentionId { document_id: document_id.into(), section_index, char_start, char_end }
    }
}

impl From<(String, usize, usize, usize)> for MentionId {
    fn from((document_id, section_index, char_start, char_end): (String, usize, usize, usize)) -> Self {
        MentionId { document_id, section_index, char_start, char_end }
    }
}

impl From<MentionId> for (String, usize, usize, usize) {
    fn from(m: MentionId) -> Self {
        (m.document_id, m.section_index, m.char_start, m.char_end)
    }
}

/// A partition of mentions into coreference clusters.
///
/// The scorers accept any mention type; disjointness and non-emptiness are
/// checked by [`ClusterSet::validate`] rather than by construction so that
/// malformed inputs read from files can be reported.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "M: Serialize", deserialize = "M: Deserialize<'de>"))]
pub struct ClusterSet<M = MentionId> {
    pub clusters: Vec<Vec<M>>,
}

impl<M> Default for ClusterSet<M> {
    fn default() -> Self {
        ClusterSet { clusters: Vec::new() }
    }
}

impl<M: Eq + Hash + Clone + Ord> ClusterSet<M> {
    pub fn new(clusters: Vec<Vec<M>>) -> Self {
        ClusterSet { clusters }
    }

    pub(crate) fn validate_as(&self, side: &'static str) -> Result<(), ScoringError> {
        let mut seen = HashSet::new();
        for cluster in &self.clusters {
            if cluster.is_empty() {
                return Err(ScoringError::EmptyCluster { side });
            }
            for m in cluster {
                if !seen.insert(m) {
                    return Err(ScoringError::Overlap { side });
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        self.validate_as("cluster set")
    }

    pub fn mention_count(&self) -> usize {
        self.clusters.iter().map(Vec::len).sum()
    }

    /// Sorted clusters of sorted mentions; equal for partitions that differ
    /// only by ordering.
    pub fn normalized(&self) -> Vec<Vec<M>> {
        let mut clusters: Vec<Vec<M>> = self
            .clusters
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort();
                c
            })
            .collect();
        clusters.sort();
        clusters
    }
}

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreTriple {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ScoreTriple { precision, recall, f1 }
    }

    pub const PERFECT: ScoreTriple = ScoreTriple { precision: 1.0, recall: 1.0, f1: 1.0 };
}
