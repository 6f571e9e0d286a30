//! Experiment orchestration: fan seeded runs out over (configuration, seed)
//! jobs, write per-run CSV logs, and post-process them into tables and
//! curve files.

pub mod ablate;
pub mod aggregate;
pub mod logs;
pub mod plot;
pub mod suite;

use std::path::{Path, PathBuf};

use crate::agents::run_training;
use crate::config::ExperimentConfig;
use crate::error::Result;

/// Output path for one run: `<out>/<config_id>/<algo>/seed_<k>.csv`.
pub fn log_path(out_dir: &Path, cfg: &ExperimentConfig, seed: u64) -> PathBuf {
    out_dir
        .join(cfg.env.config_id())
        .join(cfg.algo.as_str())
        .join(format!("seed_{seed:02}.csv"))
}

fn run_one(cfg: &ExperimentConfig, seed: u64, out_dir: &Path) -> Result<PathBuf> {
    let log = run_training(cfg, seed)?;
    let path = log_path(out_dir, cfg, seed);
    logs::write_run_log(&path, &log)?;
    Ok(path)
}

/// Execute a batch of independent (config, seed) jobs, one CSV each.
/// With the `parallel` feature the jobs run on rayon; the output files are
/// identical either way.
pub fn execute_jobs(jobs: &[(ExperimentConfig, u64)], out_dir: &Path) -> Result<Vec<PathBuf>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|(cfg, seed)| run_one(cfg, *seed, out_dir))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter()
            .map(|(cfg, seed)| run_one(cfg, *seed, out_dir))
            .collect()
    }
}

/// Run one configuration across seeds.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seeds: &[u64],
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let jobs: Vec<(ExperimentConfig, u64)> = seeds.iter().map(|&s| (cfg.clone(), s)).collect();
    execute_jobs(&jobs, out_dir)
}

/// Per-seed saturation means for one configuration, without touching disk.
pub fn run_saturations(cfg: &ExperimentConfig, seeds: &[u64]) -> Result<Vec<f64>> {
    let one = |&seed: &u64| -> Result<f64> {
        let log = run_training(cfg, seed)?;
        Ok(aggregate::saturation_mean(&log.returns()))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(one).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{AlgoId, EnvSpec};

    #[test]
    fn experiment_writes_one_file_per_seed_reproducibly() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(EnvSpec::bitflip(3, false), AlgoId::Van, 6, 0.9);
        cfg.batch_size = 16;
        let paths = run_experiment(&cfg, &[0, 1], dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(paths[0].ends_with("bitflip_m3_sub0/van/seed_00.csv"));
        let first = std::fs::read(&paths[0]).unwrap();
        let again = run_experiment(&cfg, &[0, 1], dir.path()).unwrap();
        assert_eq!(std::fs::read(&again[0]).unwrap(), first);
    }
}
