use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::assignment::max_weight_assignment;
use super::{ClusterSet, ScoreTriple, ScoringError};

/// Mention → cluster lookup over the mentions sorted once. Building it also
/// validates the set, since duplicates end up adjacent.
struct ClusterIndex<'a, M> {
    entries: Vec<(&'a M, usize)>,
}

impl<'a, M: Ord> ClusterIndex<'a, M> {
    fn build(set: &'a ClusterSet<M>, side: &'static str) -> Result<Self, ScoringError> {
        if set.clusters.iter().any(Vec::is_empty) {
            return Err(ScoringError::EmptyCluster { side });
        }
        let mut entries: Vec<(&M, usize)> =
            set.clusters.iter().enumerate().flat_map(|(i, c)| c.iter().map(move |m| (m, i))).collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(ScoringError::Overlap { side });
        }
        Ok(ClusterIndex { entries })
    }

    fn get(&self, m: &M) -> Option<usize> {
        self.entries.binary_search_by(|(x, _)| (*x).cmp(m)).ok().map(|i| self.entries[i].1)
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// `Σ(|K| − |p(K)|)` and `Σ(|K| − 1)` for `gold` partitioned by `other`;
/// mentions absent from `other` each form their own part.
fn muc_sums<M: Ord>(gold: &ClusterSet<M>, other: &ClusterIndex<'_, M>) -> (f64, f64) {
    let mut num = 0usize;
    let mut den = 0usize;
    for cluster in &gold.clusters {
        let mut owners: Vec<usize> = cluster.iter().filter_map(|m| other.get(m)).collect();
        let unaligned = cluster.len() - owners.len();
        owners.sort_unstable();
        owners.dedup();
        num += cluster.len() - (owners.len() + unaligned);
        den += cluster.len() - 1;
    }
    (num as f64, den as f64)
}

/// MUC: the fraction of coreference links recovered.
///
/// A side with no links (all singletons, or empty) scores 0.
pub fn muc<M: Eq + Hash + Clone + Ord>(key: &ClusterSet<M>, response: &ClusterSet<M>) -> Result<ScoreTriple, ScoringError> {
    let (ki, ri) = (ClusterIndex::build(key, "key")?, ClusterIndex::build(response, "response")?);
    let (rn, rd) = muc_sums(key, &ri);
    let (pn, pd) = muc_sums(response, &ki);
    Ok(ScoreTriple::new(ratio(pn, pd), ratio(rn, rd)))
}

/// Mean over `gold` mentions of `|G(m) ∩ O(m)| / |G(m)|`.
fn b_cubed_side<M: Ord>(gold: &ClusterSet<M>, other: &ClusterIndex<'_, M>) -> f64 {
    let mut total = 0.0;
    let mut mentions = 0usize;
    for cluster in &gold.clusters {
        let mut owners: Vec<usize> = cluster.iter().filter_map(|m| other.get(m)).collect();
        owners.sort_unstable();
        // Each mention m contributes |G ∩ O(m)| / |G|; grouping by O(m)
        // gives Σ n² / |G|, summed exactly in integers.
        let squares: usize = owners.chunk_by(|a, b| a == b).map(|run| run.len() * run.len()).sum();
        total += squares as f64 / cluster.len() as f64;
        mentions += cluster.len();
    }
    ratio(total, mentions as f64)
}

/// B³: per-mention cluster overlap, averaged over mentions.
pub fn b_cubed<M: Eq + Hash + Clone + Ord>(key: &ClusterSet<M>, response: &ClusterSet<M>) -> Result<ScoreTriple, ScoringError> {
    let (ki, ri) = (ClusterIndex::build(key, "key")?, ClusterIndex::build(response, "response")?);
    Ok(ScoreTriple::new(b_cubed_side(response, &ki), b_cubed_side(key, &ri)))
}

/// φ4 similarity: `2|K ∩ R| / (|K| + |R|)`.
pub fn phi4<M: Eq + Hash>(k: &[M], r: &[M]) -> f64 {
    let set: std::collections::HashSet<&M> = k.iter().collect();
    let common = r.iter().filter(|m| set.contains(m)).count();
    2.0 * common as f64 / (k.len() + r.len()) as f64
}

/// CEAF with the entity-based φ4 similarity and an optimal one-to-one
/// cluster alignment. An empty side scores 0.
pub fn ceaf_e<M: Eq + Hash + Clone + Ord>(key: &ClusterSet<M>, response: &ClusterSet<M>) -> Result<ScoreTriple, ScoringError> {
    ClusterIndex::build(key, "key")?;
    let index = ClusterIndex::build(response, "response")?;
    // Overlap counts for all cluster pairs in one pass over the key.
    let weights: Vec<Vec<f64>> = key
        .clusters
        .iter()
        .map(|k| {
            let mut common = vec![0usize; response.clusters.len()];
            for m in k {
                if let Some(j) = index.get(m) {
                    common[j] += 1;
                }
            }
            common
                .iter()
                .zip(&response.clusters)
                .map(|(&c, r)| 2.0 * c as f64 / (k.len() + r.len()) as f64)
                .collect()
        })
        .collect();
    let assignment = max_weight_assignment(&weights);
    // Sum in ascending order so that swapping key and response, which
    // transposes the matrix, cannot change the total by rounding.
    let mut matched: Vec<f64> = assignment
        .row_to_col
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| weights[i][j]))
        .collect();
    matched.sort_by(f64::total_cmp);
    let best: f64 = matched.iter().sum();
    Ok(ScoreTriple::new(
        ratio(best, response.clusters.len() as f64),
        ratio(best, key.clusters.len() as f64),
    ))
}

/// Componentwise mean; F1 is averaged, not recomputed.
pub fn macro_average(triples: &[ScoreTriple]) -> Result<ScoreTriple, ScoringError> {
    if triples.is_empty() {
        return Err(ScoringError::EmptyAverage);
    }
    let n = triples.len() as f64;
    Ok(ScoreTriple {
        precision: triples.iter().map(|t| t.precision).sum::<f64>() / n,
        recall: triples.iter().map(|t| t.recall).sum::<f64>() / n,
        f1: triples.iter().map(|t| t.f1).sum::<f64>() / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorefScores {
    pub muc: ScoreTriple,
    pub b_cubed: ScoreTriple,
    pub ceaf_e: ScoreTriple,
    /// Macro average of the three.
    pub average: ScoreTriple,
}

pub fn score_all<M: Eq + Hash + Clone + Ord>(key: &ClusterSet<M>, response: &ClusterSet<M>) -> Result<CorefScores, ScoringError> {
    let muc = muc(key, response)?;
    let b_cubed = b_cubed(key, response)?;
    let ceaf_e = ceaf_e(key, response)?;
    let average = macro_average(&[muc, b_cubed, ceaf_e])?;
    Ok(CorefScores { muc, b_cubed, ceaf_e, average })
}
