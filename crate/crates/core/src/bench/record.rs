use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::BenchError;

/// Columns preceding the per-criterion costs.
pub const FIXED_COLUMNS: [&str; 8] = [
    "trial", "seed", "nodes", "algo", "params", "build_ms", "search_ms", "feasible",
];

/// One algorithm run on one roadmap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub nodes: usize,
    pub algo: String,
    pub params: String,
    pub build_ms: f64,
    pub search_ms: f64,
    pub feasible: bool,
    /// Cost of the returned path under the active hierarchy; empty when
    /// infeasible.
    pub cost: Vec<f64>,
}

impl TrialRecord {
    /// Copy with both wall-clock columns zeroed, for determinism checks.
    pub fn without_timing(&self) -> TrialRecord {
        TrialRecord {
            build_ms: 0.0,
            search_ms: 0.0,
            ..self.clone()
        }
    }
}

/// Writes records as CSV. The number of cost columns is the longest cost
/// vector present; shorter vectors leave trailing cells empty.
pub fn write_records<W: Write>(out: W, records: &[TrialRecord]) -> Result<(), BenchError> {
    let k = records.iter().map(|r| r.cost.len()).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((1..=k).map(|i| format!("cost_{i}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.trial.to_string(),
            r.seed.to_string(),
            r.nodes.to_string(),
            r.algo.clone(),
            r.params.clone(),
            r.build_ms.to_string(),
            r.search_ms.to_string(),
            r.feasible.to_string(),
        ];
        row.extend((0..k).map(|i| r.cost.get(i).map(f64::to_string).unwrap_or_default()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| BenchError::Csv(e.to_string()))?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<TrialRecord>, BenchError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names.len() < FIXED_COLUMNS.len() || names[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(BenchError::Csv(format!("unexpected header {names:?}")));
    }
    for (i, name) in names[FIXED_COLUMNS.len()..].iter().enumerate() {
        if *name != format!("cost_{}", i + 1) {
            return Err(BenchError::Csv(format!("unexpected cost column `{name}`")));
        }
    }
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let bad = |col: &str| BenchError::Csv(format!("row {}: bad `{col}` value", line + 1));
        let mut cost = Vec::new();
        let mut gap = false;
        for cell in row.iter().skip(FIXED_COLUMNS.len()) {
            if cell.is_empty() {
                gap = true;
            } else if gap {
                return Err(bad("cost"));
            } else {
                cost.push(cell.parse().map_err(|_| bad("cost"))?);
            }
        }
        out.push(TrialRecord {
            trial: field(0).parse().map_err(|_| bad("trial"))?,
            seed: field(1).parse().map_err(|_| bad("seed"))?,
            nodes: field(2).parse().map_err(|_| bad("nodes"))?,
            algo: field(3).to_string(),
            params: field(4).to_string(),
            build_ms: field(5).parse().map_err(|_| bad("build_ms"))?,
            search_ms: field(6).parse().map_err(|_| bad("search_ms"))?,
            feasible: field(7).parse().map_err(|_| bad("feasible"))?,
            cost,
        });
    }
    Ok(out)
}
