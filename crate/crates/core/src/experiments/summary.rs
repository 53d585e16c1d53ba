use serde::{Deserialize, Serialize};

use super::config::Algorithm;
use super::sweep::TrialRecord;
use crate::error::{Error, Result};

/// Mean, population standard deviation, min and max of one error column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Stats {
                mean: f64::NAN,
                std: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k;
        Stats {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub p: f64,
    pub nu: f64,
    /// Successful trials; failed ones are excluded from the statistics.
    pub trials: usize,
    pub failures: usize,
    pub per_entry_error: Stats,
    pub frob_error: Stats,
    pub dist_error: Stats,
}

/// Groups by `(algorithm, p, nu)` in order of first appearance.
pub fn aggregate(records: &[TrialRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::invalid("cannot aggregate an empty record set"));
    }
    let mut keys: Vec<(Algorithm, u64, u64)> = Vec::new();
    let mut groups: Vec<Vec<&TrialRecord>> = Vec::new();
    for rec in records {
        let key = (rec.algorithm, rec.p.to_bits(), rec.nu.to_bits());
        match keys.iter().position(|k| *k == key) {
            Some(i) => groups[i].push(rec),
            None => {
                keys.push(key);
                groups.push(vec![rec]);
            }
        }
    }
    Ok(groups
        .into_iter()
        .map(|group| {
            let ok: Vec<&TrialRecord> = group.iter().copied().filter(|r| !r.failed()).collect();
            let column = |f: fn(&TrialRecord) -> f64| {
                Stats::of(&ok.iter().map(|r| f(r)).collect::<Vec<_>>())
            };
            SummaryRow {
                algorithm: group[0].algorithm,
                p: group[0].p,
                nu: group[0].nu,
                trials: ok.len(),
                failures: group.len() - ok.len(),
                per_entry_error: column(|r| r.per_entry_error),
                frob_error: column(|r| r.frob_error),
                dist_error: column(|r| r.dist_error),
            }
        })
        .collect())
}
