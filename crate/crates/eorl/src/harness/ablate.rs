//! Population-size ablation: the four operator-bearing variants swept over a
//! list of population sizes, reported per variant and as their average.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::config::{AlgoId, ExperimentConfig};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub n: usize,
    /// Saturation mean per variant, averaged over seeds.
    pub per_variant: BTreeMap<AlgoId, f64>,
    /// Arithmetic mean of the four variant series.
    pub average: f64,
}

/// Run the sweep. The base configuration supplies the environment, episode
/// count, decay, and hyperparameters; its algorithm field is ignored.
pub fn ablation_sweep(
    base: &ExperimentConfig,
    n_values: &[usize],
    seeds: &[u64],
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for &n in n_values {
        let mut per_variant = BTreeMap::new();
        for algo in AlgoId::eorl_variants() {
            let mut cfg = base.clone();
            cfg.algo = algo;
            cfg.n = n;
            let sats = crate::harness::run_saturations(&cfg, seeds)?;
            per_variant.insert(algo, sats.iter().sum::<f64>() / sats.len() as f64);
        }
        let average = per_variant.values().sum::<f64>() / per_variant.len() as f64;
        rows.push(AblationRow {
            n,
            per_variant,
            average,
        });
    }
    Ok(rows)
}

pub fn ablation_to_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("n");
    for algo in AlgoId::eorl_variants() {
        write!(out, ",{}", algo.column()).unwrap();
    }
    out.push_str(",EORL-AVG\n");
    for row in rows {
        write!(out, "{}", row.n).unwrap();
        for algo in AlgoId::eorl_variants() {
            write!(out, ",{}", row.per_variant[&algo]).unwrap();
        }
        writeln!(out, ",{}", row.average).unwrap();
    }
    out
}
