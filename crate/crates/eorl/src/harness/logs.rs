//! Run-log CSV files: one per (configuration, seed), with a fixed column
//! order and shortest-round-trip float formatting so reruns are
//! byte-comparable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::agents::RunLog;
use crate::error::{Error, Result};

pub const RUN_LOG_HEADER: &str = "seed,episode,policy_index,episode_return,epsilon,evo_event";

pub fn run_log_to_csv(log: &RunLog) -> String {
    let mut out = String::with_capacity(32 * log.rows.len() + 64);
    out.push_str(RUN_LOG_HEADER);
    out.push('\n');
    for row in &log.rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.seed,
            row.episode,
            row.policy_index,
            row.episode_return,
            row.epsilon,
            row.evo_event.unwrap_or("")
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn write_run_log(path: &Path, log: &RunLog) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, run_log_to_csv(log))?;
    Ok(())
}

/// The fields the aggregation pipeline needs back out of a log file.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRun {
    pub seed: u64,
    pub returns: Vec<f64>,
}

pub fn parse_run_log(text: &str) -> Result<ParsedRun> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RUN_LOG_HEADER => {}
        other => {
            return Err(Error::Config(format!(
                "bad run log header: {other:?}"
            )))
        }
    }
    let mut seed = 0;
    let mut returns = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut fields = line.split(',');
        let err = || Error::Config(format!("bad run log row {}: {line:?}", i + 2));
        seed = fields.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        let episode: usize = fields.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        if episode != i + 1 {
            return Err(Error::Config(format!(
                "run log rows out of order at {}",
                i + 2
            )));
        }
        let _policy: usize = fields.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        let ret: f64 = fields.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        returns.push(ret);
    }
    Ok(ParsedRun { seed, returns })
}

pub fn read_run_log(path: &Path) -> Result<ParsedRun> {
    parse_run_log(&fs::read_to_string(path)?)
}
