use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::TrialRecord;

/// Statistics for one (node count, algorithm, parameters, metric) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub nodes: usize,
    pub algo: String,
    pub params: String,
    pub metric: String,
    pub count: usize,
    pub mean: f64,
    pub p10: f64,
    pub p90: f64,
}

/// Nearest-rank percentile of ascending `sorted`: the value at rank
/// `⌈p/100 · N⌉` (1-based, at least 1).
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let n = sorted.len();
    // p·N/100 is computed in that order so round percentages stay exact
    let rank = (p * n as f64 / 100.0).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Groups records and reports mean, 10th and 90th percentiles of build time,
/// search time and every cost component. Cost metrics only use feasible
/// records; a group with nothing to aggregate is dropped with a warning.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, &str, &str), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.nodes, &r.algo, &r.params)).or_default().push(r);
    }
    let mut out = Vec::new();
    for ((nodes, algo, params), members) in groups {
        let k = members.iter().map(|r| r.cost.len()).max().unwrap_or(0);
        let mut metrics: Vec<(String, Vec<f64>)> = vec![
            ("build_ms".into(), members.iter().map(|r| r.build_ms).collect()),
            ("search_ms".into(), members.iter().map(|r| r.search_ms).collect()),
        ];
        for i in 0..k {
            let values = members
                .iter()
                .filter(|r| r.feasible)
                .filter_map(|r| r.cost.get(i).copied())
                .collect();
            metrics.push((format!("cost_{}", i + 1), values));
        }
        if members.iter().all(|r| !r.feasible) {
            log::warn!("{algo} [{params}] at {nodes} nodes: no feasible runs, cost metrics omitted");
        }
        for (metric, mut values) in metrics {
            if values.is_empty() {
                log::warn!("{algo} [{params}] at {nodes} nodes: empty `{metric}` group omitted");
                continue;
            }
            values.sort_by(f64::total_cmp);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            out.push(SummaryRow {
                nodes,
                algo: algo.to_string(),
                params: params.to_string(),
                metric,
                count: values.len(),
                mean,
                p10: nearest_rank(&values, 10.0),
                p90: nearest_rank(&values, 90.0),
            });
        }
    }
    out
}
