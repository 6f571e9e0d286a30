//! Saturation-reward aggregation: per-seed means over the last 100 episodes,
//! averaged across seeds, arranged into the eleven-column report table with
//! best-count bookkeeping.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::{AlgoId, EnvSpec, COLUMN_ORDER};
use crate::error::{Error, Result};
use crate::harness::logs::read_run_log;

/// Mean return over the final 100 episodes (or all of them for short runs).
pub fn saturation_mean(returns: &[f64]) -> f64 {
    let n = returns.len().min(100);
    assert!(n > 0, "cannot aggregate an empty run");
    returns[returns.len() - n..].iter().sum::<f64>() / n as f64
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One run's worth of aggregation input.
#[derive(Debug, Clone)]
pub struct RunData {
    pub env: EnvSpec,
    pub algo: AlgoId,
    pub seed: u64,
    pub returns: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub mean: f64,
    pub std: f64,
    pub n_seeds: usize,
}

#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub env: EnvSpec,
    pub episodes: usize,
    pub cells: BTreeMap<AlgoId, Cell>,
    /// This experiment's contribution to each algorithm's best count
    /// (1/k for a k-way tie at the top).
    pub best_share: BTreeMap<AlgoId, f64>,
}

#[derive(Debug, Clone)]
pub struct AggregateTable {
    pub rows: Vec<AggregateRow>,
}

impl AggregateTable {
    /// Per-algorithm mean of the row means (the report's `Average` line).
    pub fn averages(&self) -> BTreeMap<AlgoId, f64> {
        let mut sums: BTreeMap<AlgoId, (f64, usize)> = BTreeMap::new();
        for row in &self.rows {
            for (&algo, cell) in &row.cells {
                let e = sums.entry(algo).or_insert((0.0, 0));
                e.0 += cell.mean;
                e.1 += 1;
            }
        }
        sums.into_iter()
            .map(|(a, (s, c))| (a, s / c as f64))
            .collect()
    }

    /// Per-algorithm total best count (the report's `Best results` line).
    pub fn best_counts(&self) -> BTreeMap<AlgoId, f64> {
        let mut totals: BTreeMap<AlgoId, f64> = BTreeMap::new();
        for row in &self.rows {
            for (&algo, share) in &row.best_share {
                *totals.entry(algo).or_insert(0.0) += share;
            }
        }
        totals
    }
}

/// Aggregate run data into the report table. Rows are sorted by environment,
/// subgoal variant, stochasticity, and size.
pub fn aggregate(data: &[RunData]) -> AggregateTable {
    let mut grouped: BTreeMap<String, (EnvSpec, usize, BTreeMap<AlgoId, Vec<f64>>)> =
        BTreeMap::new();
    for run in data {
        let entry = grouped
            .entry(run.env.config_id())
            .or_insert_with(|| (run.env.clone(), run.returns.len(), BTreeMap::new()));
        entry.1 = entry.1.max(run.returns.len());
        entry
            .2
            .entry(run.algo)
            .or_default()
            .push(saturation_mean(&run.returns));
    }

    let mut rows: Vec<AggregateRow> = grouped
        .into_values()
        .map(|(env, episodes, per_algo)| {
            let cells: BTreeMap<AlgoId, Cell> = per_algo
                .into_iter()
                .map(|(algo, sats)| {
                    let (mean, std) = mean_std(&sats);
                    (
                        algo,
                        Cell {
                            mean,
                            std,
                            n_seeds: sats.len(),
                        },
                    )
                })
                .collect();
            let best = cells
                .values()
                .map(|c| c.mean)
                .fold(f64::NEG_INFINITY, f64::max);
            let winners: Vec<AlgoId> = cells
                .iter()
                .filter(|(_, c)| c.mean == best)
                .map(|(&a, _)| a)
                .collect();
            let share = 1.0 / winners.len() as f64;
            let best_share = winners.into_iter().map(|a| (a, share)).collect();
            AggregateRow {
                env,
                episodes,
                cells,
                best_share,
            }
        })
        .collect();
    rows.sort_by_key(|r| r.env.sort_key());
    AggregateTable { rows }
}

/// Scan a run directory (`<dir>/<config_id>/<algo>/seed_*.csv`) into
/// aggregation input, in deterministic path order.
pub fn collect_run_data(dir: &Path) -> Result<Vec<RunData>> {
    let mut data = Vec::new();
    let mut config_dirs: Vec<_> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    config_dirs.sort();
    for config_dir in config_dirs {
        let id = config_dir
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let Some(env) = EnvSpec::parse_id(&id) else {
            continue;
        };
        let mut algo_dirs: Vec<_> = fs::read_dir(&config_dir)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        algo_dirs.sort();
        for algo_dir in algo_dirs {
            let name = algo_dir
                .file_name()
                .and_then(|s| s.to_str())
                .unwrap_or_default();
            let Ok(algo) = AlgoId::parse(name) else {
                continue;
            };
            let mut files: Vec<_> = fs::read_dir(&algo_dir)?
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|e| e == "csv"))
                .collect();
            files.sort();
            for file in files {
                let parsed = read_run_log(&file)?;
                if parsed.returns.is_empty() {
                    return Err(Error::Config(format!("empty run log {}", file.display())));
                }
                data.push(RunData {
                    env: env.clone(),
                    algo,
                    seed: parsed.seed,
                    returns: parsed.returns,
                });
            }
        }
    }
    Ok(data)
}

/// Render the table as CSV: one row per experiment with mean and std
/// columns per algorithm (the external-baseline placeholder column stays
/// empty), then `average` and `best_count` summary rows.
pub fn table_to_csv(table: &AggregateTable) -> String {
    let mut out = String::new();
    out.push_str("env,size,subgoals,stochasticity,episodes,seeds");
    for col in COLUMN_ORDER {
        write!(out, ",{col}").unwrap();
    }
    for col in COLUMN_ORDER {
        write!(out, ",{col}_std").unwrap();
    }
    out.push('\n');

    let fmt_env = |env: &EnvSpec| match env.kind {
        crate::config::EnvKind::BitFlip => "bitflip",
        crate::config::EnvKind::Grid => "grid",
    };
    for row in &table.rows {
        let seeds = row.cells.values().map(|c| c.n_seeds).max().unwrap_or(0);
        write!(
            out,
            "{},{},{},{},{},{}",
            fmt_env(&row.env),
            row.env.size,
            row.env.subgoals.as_str(),
            row.env.stochasticity,
            row.episodes,
            seeds
        )
        .unwrap();
        for col in COLUMN_ORDER {
            match AlgoId::from_column(col).and_then(|a| row.cells.get(&a)) {
                Some(cell) => write!(out, ",{}", cell.mean).unwrap(),
                None => out.push(','),
            }
        }
        for col in COLUMN_ORDER {
            match AlgoId::from_column(col).and_then(|a| row.cells.get(&a)) {
                Some(cell) => write!(out, ",{}", cell.std).unwrap(),
                None => out.push(','),
            }
        }
        out.push('\n');
    }

    let averages = table.averages();
    out.push_str("average,,,,,");
    for col in COLUMN_ORDER {
        match AlgoId::from_column(col).and_then(|a| averages.get(&a)) {
            Some(v) => write!(out, ",{v}").unwrap(),
            None => out.push(','),
        }
    }
    for _ in COLUMN_ORDER {
        out.push(',');
    }
    out.push('\n');

    let best = table.best_counts();
    out.push_str("best_count,,,,,");
    for col in COLUMN_ORDER {
        match AlgoId::from_column(col) {
            Some(a) if table.rows.iter().any(|r| r.cells.contains_key(&a)) => {
                write!(out, ",{}", best.get(&a).copied().unwrap_or(0.0)).unwrap()
            }
            _ => out.push(','),
        }
    }
    for _ in COLUMN_ORDER {
        out.push(',');
    }
    out.push('\n');
    out
}
