//! `eorl` command line: run seeded experiments, aggregate saturation tables,
//! emit training-curve data, and sweep population sizes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use eorl::config::{
    default_decay, parse_kv, parse_seeds, AlgoId, EnvKind, EnvSpec, ExperimentConfig, Subgoals,
};
use eorl::harness::ablate::{ablation_sweep, ablation_to_csv};
use eorl::harness::aggregate::{aggregate, collect_run_data, table_to_csv};
use eorl::harness::logs::read_run_log;
use eorl::harness::plot::{curve_from_runs, curve_to_csv};
use eorl::harness::suite::{bitflip_table, grid_table, SuiteEntry};
use eorl::harness::execute_jobs;

#[derive(Parser)]
#[command(name = "eorl", version, about = "Population-based Q-learning experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment (or a whole suite) across seeds, one CSV per run.
    Run(RunArgs),
    /// Aggregate run logs into the saturation report table.
    Aggregate {
        /// Directory previously filled by `run`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output CSV file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit per-episode mean/std curve CSVs for every (config, algorithm).
    PlotData {
        /// Directory previously filled by `run`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory for curve files.
        #[arg(long)]
        out: PathBuf,
        /// Trailing smoothing window (1 = raw).
        #[arg(long, default_value_t = 20)]
        window: usize,
    },
    /// Sweep population sizes over the operator-bearing variants.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct CommonRunArgs {
    /// Flat key=value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Environment kind: bitflip | grid.
    #[arg(long)]
    env: Option<String>,
    /// Bit count (1D) or grid side (2D).
    #[arg(long)]
    size: Option<usize>,
    /// Subgoal variant: 0 | 1 | 2+ | 2-.
    #[arg(long)]
    subgoals: Option<String>,
    /// Probability of a random effective action (2D only).
    #[arg(long)]
    stochasticity: Option<f64>,
    /// Episodes per run.
    #[arg(long)]
    episodes: Option<usize>,
    /// Epsilon decay per episode (defaults from the episode count).
    #[arg(long)]
    decay: Option<f64>,
    /// Seed count `N` (seeds 0..N) or explicit list `0,3,7`.
    #[arg(long)]
    seeds: Option<String>,
    /// Population size for population algorithms.
    #[arg(long)]
    n: Option<usize>,
    /// Master seed from which all run streams derive.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Output location.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Algorithm id (van|cbe|her|per|cemrl|eorl-fix|eorl-05-00|eorl-05-05|
    /// eorl-10-05|eorl-actv) or `all`.
    #[arg(long)]
    algo: Option<String>,
    /// Run a whole report grid: bitflip-table | grid-table.
    #[arg(long)]
    suite: Option<String>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Population sizes to sweep.
    #[arg(long, default_value = "2,4,8,12")]
    n_values: String,
}

/// Configuration resolved from file + flags.
struct Resolved {
    map: BTreeMap<String, String>,
}

impl Resolved {
    fn new(common: &CommonRunArgs) -> Result<Self> {
        let mut map = match &common.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                parse_kv(&text)?
            }
            None => BTreeMap::new(),
        };
        let mut set = |key: &str, value: Option<String>| {
            if let Some(v) = value {
                map.insert(key.to_string(), v);
            }
        };
        set("env", common.env.clone());
        set("size", common.size.map(|v| v.to_string()));
        set("subgoals", common.subgoals.clone());
        set("stochasticity", common.stochasticity.map(|v| v.to_string()));
        set("episodes", common.episodes.map(|v| v.to_string()));
        set("decay", common.decay.map(|v| v.to_string()));
        set("seeds", common.seeds.clone());
        set("n", common.n.map(|v| v.to_string()));
        set("master_seed", common.master_seed.map(|v| v.to_string()));
        set(
            "out",
            common.out.as_ref().map(|v| v.display().to_string()),
        );
        Ok(Self { map })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| anyhow::anyhow!("invalid value for {key}: {raw:?}")),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.parse(key)?
            .ok_or_else(|| anyhow::anyhow!("missing required setting: {key}"))
    }

    fn env_spec(&self) -> Result<EnvSpec> {
        let kind = match self.get("env") {
            Some("bitflip") => EnvKind::BitFlip,
            Some("grid") => EnvKind::Grid,
            Some(other) => bail!("env must be bitflip or grid, got {other:?}"),
            None => bail!("missing required setting: env"),
        };
        let spec = EnvSpec {
            kind,
            size: self.require("size")?,
            subgoals: Subgoals::parse(self.get("subgoals").unwrap_or("0"))?,
            stochasticity: self.parse("stochasticity")?.unwrap_or(0.0),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn episodes_and_decay(&self) -> Result<(usize, f64)> {
        let episodes: usize = self.require("episodes")?;
        let decay = match self.parse::<f64>("decay")? {
            Some(d) => d,
            None => default_decay(episodes).ok_or_else(|| {
                anyhow::anyhow!(
                    "no default decay for {episodes} episodes; pass --decay explicitly"
                )
            })?,
        };
        Ok((episodes, decay))
    }

    fn seeds(&self) -> Result<Vec<u64>> {
        Ok(parse_seeds(self.get("seeds").unwrap_or("10"))?)
    }

    fn out_dir(&self) -> Result<PathBuf> {
        Ok(PathBuf::from(
            self.get("out")
                .ok_or_else(|| anyhow::anyhow!("missing required setting: out"))?,
        ))
    }

    /// Apply hyperparameter overrides shared by all commands.
    fn apply_overrides(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(n) = self.parse("n")? {
            cfg.n = n;
        }
        if let Some(v) = self.parse("batch_size")? {
            cfg.batch_size = v;
        }
        if let Some(v) = self.parse("minibatch_size")? {
            cfg.minibatch_size = v;
        }
        if let Some(v) = self.parse("epochs")? {
            cfg.epochs = v;
        }
        if let Some(v) = self.parse("lr")? {
            cfg.learning_rate = v;
        }
        if let Some(v) = self.parse("buffer_factor")? {
            cfg.buffer_factor = v;
        }
        if let Some(v) = self.parse("sigma")? {
            cfg.sigma = v;
        }
        if let Some(v) = self.parse("q")? {
            cfg.q = v;
        }
        if let Some(v) = self.parse("master_seed")? {
            cfg.master_seed = v;
        }
        cfg.validate()?;
        Ok(())
    }
}

fn algo_list(raw: Option<&str>) -> Result<Vec<AlgoId>> {
    match raw {
        None => bail!("missing required setting: algo (an algorithm id or `all`)"),
        Some("all") => Ok(AlgoId::all().to_vec()),
        Some(one) => Ok(vec![AlgoId::parse(one)?]),
    }
}

fn suite_entries(name: &str) -> Result<Vec<SuiteEntry>> {
    match name {
        "bitflip-table" => Ok(bitflip_table()),
        "grid-table" => Ok(grid_table()),
        other => bail!("unknown suite {other:?} (use bitflip-table or grid-table)"),
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let resolved = Resolved::new(&args.common)?;
    let seeds = resolved.seeds()?;
    let out = resolved.out_dir()?;
    let algos = algo_list(args.algo.as_deref().or_else(|| resolved.get("algo")))?;

    let entries: Vec<SuiteEntry> = match args.suite.as_deref().or_else(|| resolved.get("suite")) {
        Some(name) => suite_entries(name)?,
        None => {
            let env = resolved.env_spec()?;
            let (episodes, decay) = resolved.episodes_and_decay()?;
            vec![(env, episodes, decay)]
        }
    };

    let mut jobs = Vec::new();
    for (env, episodes, decay) in &entries {
        for &algo in &algos {
            let mut cfg = ExperimentConfig::new(env.clone(), algo, *episodes, *decay);
            resolved.apply_overrides(&mut cfg)?;
            for &seed in &seeds {
                jobs.push((cfg.clone(), seed));
            }
        }
    }

    eprintln!(
        "running {} jobs ({} configs x {} algorithms x {} seeds) -> {}",
        jobs.len(),
        entries.len(),
        algos.len(),
        seeds.len(),
        out.display()
    );
    let paths = execute_jobs(&jobs, &out)?;
    eprintln!("wrote {} run logs", paths.len());
    Ok(())
}

fn cmd_aggregate(input: &Path, out: &Path) -> Result<()> {
    let data = collect_run_data(input)?;
    if data.is_empty() {
        bail!("no run logs found under {}", input.display());
    }
    let table = aggregate(&data);
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(out, table_to_csv(&table))?;
    eprintln!(
        "aggregated {} runs into {} experiment rows -> {}",
        data.len(),
        table.rows.len(),
        out.display()
    );
    Ok(())
}

fn cmd_plot_data(input: &Path, out: &Path, window: usize) -> Result<()> {
    if window == 0 {
        bail!("window must be >= 1");
    }
    fs::create_dir_all(out)?;
    let mut written = 0usize;
    let mut config_dirs: Vec<_> = fs::read_dir(input)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    config_dirs.sort();
    for config_dir in config_dirs {
        let config_id = config_dir
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let mut algo_dirs: Vec<_> = fs::read_dir(&config_dir)?
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        algo_dirs.sort();
        for algo_dir in algo_dirs {
            let algo = algo_dir
                .file_name()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let mut files: Vec<_> = fs::read_dir(&algo_dir)?
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|e| e == "csv"))
                .collect();
            files.sort();
            if files.is_empty() {
                continue;
            }
            let mut per_seed = Vec::new();
            for file in &files {
                per_seed.push(read_run_log(file)?.returns);
            }
            let curve = curve_from_runs(&per_seed, window)?;
            let path = out.join(format!("{config_id}__{algo}.csv"));
            fs::write(&path, curve_to_csv(&curve))?;
            written += 1;
        }
    }
    if written == 0 {
        bail!("no run logs found under {}", input.display());
    }
    eprintln!("wrote {written} curve files to {}", out.display());
    Ok(())
}

fn cmd_ablate(args: &AblateArgs) -> Result<()> {
    let resolved = Resolved::new(&args.common)?;
    let env = resolved.env_spec()?;
    let (episodes, decay) = resolved.episodes_and_decay()?;
    let seeds = resolved.seeds()?;
    let out = resolved.out_dir()?;
    let n_values: Vec<usize> = args
        .n_values
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .context("invalid --n-values list")?;
    if n_values.is_empty() {
        bail!("--n-values must name at least one population size");
    }

    let mut base = ExperimentConfig::new(env, AlgoId::EorlFix, episodes, decay);
    resolved.apply_overrides(&mut base)?;

    eprintln!(
        "ablation: {} population sizes x 4 variants x {} seeds",
        n_values.len(),
        seeds.len()
    );
    let rows = ablation_sweep(&base, &n_values, &seeds)?;
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(&out, ablation_to_csv(&rows))?;
    eprintln!("wrote ablation table -> {}", out.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Aggregate { input, out } => cmd_aggregate(input, out),
        Command::PlotData { input, out, window } => cmd_plot_data(input, out, *window),
        Command::Ablate(args) => cmd_ablate(args),
    }
}
