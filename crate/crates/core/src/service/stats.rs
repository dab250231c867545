use serde::{Deserialize, Serialize};

use crate::model::{Protocol, Source};

/// Annotation time statistics for one (source, protocol) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingCell {
    pub source: Source,
    pub protocol: Protocol,
    pub n: usize,
    /// Seconds; absent when `n = 0`.
    pub mean: Option<f64>,
    /// Sample standard deviation; absent when `n < 2`.
    pub std_dev: Option<f64>,
}

/// Four cells, wiki/quac × grounded/span, from `(source, protocol, seconds)`.
pub fn timing_cells(samples: impl IntoIterator<Item = (Source, Protocol, f64)>) -> Vec<TimingCell> {
    let mut buckets: Vec<(Source, Protocol, Vec<f64>)> = Source::ALL
        .iter()
        .flat_map(|&s| Protocol::ALL.iter().map(move |&p| (s, p, Vec::new())))
        .collect();
    for (source, protocol, secs) in samples {
        if let Some(b) = buckets.iter_mut().find(|b| b.0 == source && b.1 == protocol) {
            b.2.push(secs);
        }
    }
    buckets
        .into_iter()
        .map(|(source, protocol, xs)| {
            let n = xs.len();
            let mean = (n > 0).then(|| xs.iter().sum::<f64>() / n as f64);
            let std_dev = mean.filter(|_| n >= 2).map(|m| {
                (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            });
            TimingCell { source, protocol, n, mean, std_dev }
        })
        .collect()
}
