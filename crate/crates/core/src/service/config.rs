use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::TIME_LIMIT_SECS;

/// Attributes the crowdsourcing platform reports for an annotator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatorProfile {
    pub native_english: bool,
    /// Fraction of the annotator's past work that was approved, in [0, 1].
    pub approval_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// A secret test passes only when exact match is strictly above this.
    pub gating_threshold: f64,
    pub time_limit_secs: f64,
    /// Every `test_interval`-th task of an annotator is a secret test.
    pub test_interval: usize,
    pub doubly_per_source: usize,
    pub singly_per_source: usize,
    /// Eligibility also requires an approval rate strictly above this.
    pub min_approval_rate: f64,
    /// Events between snapshots of the service state.
    pub snapshot_every: usize,
    /// Known annotators. When empty, anyone may request tasks.
    pub annotators: BTreeMap<String, AnnotatorProfile>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            gating_threshold: 0.9,
            time_limit_secs: TIME_LIMIT_SECS,
            test_interval: 5,
            doubly_per_source: 30,
            singly_per_source: 70,
            min_approval_rate: 0.9,
            snapshot_every: 100,
            annotators: BTreeMap::new(),
        }
    }
}

impl ServiceConfig {
    pub fn is_eligible(&self, annotator_id: &str) -> bool {
        if self.annotators.is_empty() {
            return true;
        }
        self.annotators
            .get(annotator_id)
            .is_some_and(|p| p.native_english && p.approval_rate > self.min_approval_rate)
    }

    /// Whether the task issued after `completed` finished tasks is a test.
    pub fn is_test_position(&self, completed: usize) -> bool {
        self.test_interval > 0 && completed % self.test_interval == self.test_interval - 1
    }
}
