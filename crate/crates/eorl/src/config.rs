//! Experiment configuration: environment descriptors, algorithm identifiers
//! with their implied hyperparameters, and the flat key=value config format.

use std::collections::BTreeMap;

use crate::envs::{Env, GridMode};
use crate::error::{Error, Result};
use crate::evolution::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EnvKind {
    BitFlip,
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Subgoals {
    Zero,
    One,
    TwoPlus,
    TwoMinus,
}

impl Subgoals {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "0" => Ok(Subgoals::Zero),
            "1" => Ok(Subgoals::One),
            "2+" => Ok(Subgoals::TwoPlus),
            "2-" => Ok(Subgoals::TwoMinus),
            other => Err(Error::Config(format!(
                "subgoals must be one of 0|1|2+|2-, got {other:?}"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Subgoals::Zero => "0",
            Subgoals::One => "1",
            Subgoals::TwoPlus => "2+",
            Subgoals::TwoMinus => "2-",
        }
    }

    /// Filesystem-safe token used in config ids.
    fn id_token(&self) -> &'static str {
        match self {
            Subgoals::Zero => "0",
            Subgoals::One => "1",
            Subgoals::TwoPlus => "2p",
            Subgoals::TwoMinus => "2m",
        }
    }

    fn from_id_token(s: &str) -> Option<Self> {
        match s {
            "0" => Some(Subgoals::Zero),
            "1" => Some(Subgoals::One),
            "2p" => Some(Subgoals::TwoPlus),
            "2m" => Some(Subgoals::TwoMinus),
            _ => None,
        }
    }
}

/// Which benchmark environment a run uses.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub size: usize,
    pub subgoals: Subgoals,
    pub stochasticity: f64,
}

impl EnvSpec {
    pub fn bitflip(size: usize, subgoal: bool) -> Self {
        Self {
            kind: EnvKind::BitFlip,
            size,
            subgoals: if subgoal { Subgoals::One } else { Subgoals::Zero },
            stochasticity: 0.0,
        }
    }

    pub fn grid(size: usize, subgoals: Subgoals, stochasticity: f64) -> Self {
        Self {
            kind: EnvKind::Grid,
            size,
            subgoals,
            stochasticity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            EnvKind::BitFlip => {
                if self.size < 1 {
                    return Err(Error::Config("bitflip size must be >= 1".into()));
                }
                if matches!(self.subgoals, Subgoals::TwoPlus | Subgoals::TwoMinus) {
                    return Err(Error::Config(
                        "bitflip supports subgoals 0 or 1 only".into(),
                    ));
                }
                if self.stochasticity != 0.0 {
                    return Err(Error::Config("bitflip is deterministic".into()));
                }
            }
            EnvKind::Grid => {
                if self.size < 2 {
                    return Err(Error::Config("grid size must be >= 2".into()));
                }
                if !(0.0..=1.0).contains(&self.stochasticity) {
                    return Err(Error::Config("stochasticity must be in [0, 1]".into()));
                }
            }
        }
        Ok(())
    }

    pub fn build(&self) -> Env {
        match self.kind {
            EnvKind::BitFlip => Env::bitflip(self.size, self.subgoals == Subgoals::One),
            EnvKind::Grid => {
                let mode = match self.subgoals {
                    Subgoals::Zero => GridMode::Sub0,
                    Subgoals::One => GridMode::Sub1,
                    Subgoals::TwoPlus => GridMode::Sub2Plus,
                    Subgoals::TwoMinus => GridMode::Sub2Minus,
                };
                Env::grid(self.size, mode, self.stochasticity)
            }
        }
    }

    /// Stable identifier used for output directories and table rows.
    pub fn config_id(&self) -> String {
        match self.kind {
            EnvKind::BitFlip => {
                format!("bitflip_m{}_sub{}", self.size, self.subgoals.id_token())
            }
            EnvKind::Grid => format!(
                "grid_m{}_sub{}_p{:.2}",
                self.size,
                self.subgoals.id_token(),
                self.stochasticity
            ),
        }
    }

    /// Inverse of [`config_id`](Self::config_id).
    pub fn parse_id(id: &str) -> Option<Self> {
        let mut parts = id.split('_');
        let kind = parts.next()?;
        let size: usize = parts.next()?.strip_prefix('m')?.parse().ok()?;
        let sub = Subgoals::from_id_token(parts.next()?.strip_prefix("sub")?)?;
        match kind {
            "bitflip" => {
                if parts.next().is_some() {
                    return None;
                }
                Some(EnvSpec {
                    kind: EnvKind::BitFlip,
                    size,
                    subgoals: sub,
                    stochasticity: 0.0,
                })
            }
            "grid" => {
                let p: f64 = parts.next()?.strip_prefix('p')?.parse().ok()?;
                if parts.next().is_some() {
                    return None;
                }
                Some(EnvSpec {
                    kind: EnvKind::Grid,
                    size,
                    subgoals: sub,
                    stochasticity: p,
                })
            }
            _ => None,
        }
    }

    /// Sort key matching the report row order: environment kind, subgoal
    /// variant, stochasticity, then size.
    pub fn sort_key(&self) -> (EnvKind, Subgoals, u64, usize) {
        (
            self.kind,
            self.subgoals,
            (self.stochasticity * 1000.0).round() as u64,
            self.size,
        )
    }
}

/// The eleven-column report keeps a placeholder column for an external
/// baseline that this crate does not implement.
pub const CER_COLUMN: &str = "CER";

/// Report column order.
pub const COLUMN_ORDER: [&str; 11] = [
    "VAN",
    "CER",
    "HER",
    "PER",
    "CBE",
    "EORL-FIX",
    "CEM-RL",
    "EORL-05-00",
    "EORL-05-05",
    "EORL-10-05",
    "EORL-ACTV",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AlgoId {
    Van,
    Cbe,
    Her,
    Per,
    CemRl,
    EorlFix,
    Eorl0500,
    Eorl0505,
    Eorl1005,
    EorlActv,
}

impl AlgoId {
    pub fn all() -> [AlgoId; 10] {
        [
            AlgoId::Van,
            AlgoId::Cbe,
            AlgoId::Her,
            AlgoId::Per,
            AlgoId::CemRl,
            AlgoId::EorlFix,
            AlgoId::Eorl0500,
            AlgoId::Eorl0505,
            AlgoId::Eorl1005,
            AlgoId::EorlActv,
        ]
    }

    /// The four variants with active evolutionary operators.
    pub fn eorl_variants() -> [AlgoId; 4] {
        [
            AlgoId::Eorl0500,
            AlgoId::Eorl0505,
            AlgoId::Eorl1005,
            AlgoId::EorlActv,
        ]
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "van" => Ok(AlgoId::Van),
            "cbe" => Ok(AlgoId::Cbe),
            "her" => Ok(AlgoId::Her),
            "per" => Ok(AlgoId::Per),
            "cemrl" | "cem-rl" => Ok(AlgoId::CemRl),
            "eorl-fix" => Ok(AlgoId::EorlFix),
            "eorl-05-00" => Ok(AlgoId::Eorl0500),
            "eorl-05-05" => Ok(AlgoId::Eorl0505),
            "eorl-10-05" => Ok(AlgoId::Eorl1005),
            "eorl-actv" => Ok(AlgoId::EorlActv),
            other => Err(Error::Config(format!("unknown algorithm {other:?}"))),
        }
    }

    /// CLI/filesystem token.
    pub fn as_str(&self) -> &'static str {
        match self {
            AlgoId::Van => "van",
            AlgoId::Cbe => "cbe",
            AlgoId::Her => "her",
            AlgoId::Per => "per",
            AlgoId::CemRl => "cemrl",
            AlgoId::EorlFix => "eorl-fix",
            AlgoId::Eorl0500 => "eorl-05-00",
            AlgoId::Eorl0505 => "eorl-05-05",
            AlgoId::Eorl1005 => "eorl-10-05",
            AlgoId::EorlActv => "eorl-actv",
        }
    }

    /// Report column header.
    pub fn column(&self) -> &'static str {
        match self {
            AlgoId::Van => "VAN",
            AlgoId::Cbe => "CBE",
            AlgoId::Her => "HER",
            AlgoId::Per => "PER",
            AlgoId::CemRl => "CEM-RL",
            AlgoId::EorlFix => "EORL-FIX",
            AlgoId::Eorl0500 => "EORL-05-00",
            AlgoId::Eorl0505 => "EORL-05-05",
            AlgoId::Eorl1005 => "EORL-10-05",
            AlgoId::EorlActv => "EORL-ACTV",
        }
    }

    pub fn from_column(col: &str) -> Option<Self> {
        AlgoId::all().into_iter().find(|a| a.column() == col)
    }

    /// Scheduling scheme and base operator rates implied by the id.
    pub fn rates(&self) -> (Scheme, f64, f64) {
        match self {
            AlgoId::Eorl0500 => (Scheme::UniformRandom, 0.05, 0.0),
            AlgoId::Eorl0505 => (Scheme::UniformRandom, 0.05, 0.05),
            AlgoId::Eorl1005 => (Scheme::UniformRandom, 0.1, 0.05),
            AlgoId::EorlActv => (Scheme::ActiveRandom, 0.05, 0.05),
            _ => (Scheme::Fixed, 0.0, 0.0),
        }
    }

    /// Whether the id maintains a population of n policies.
    pub fn is_population(&self) -> bool {
        matches!(
            self,
            AlgoId::CemRl
                | AlgoId::EorlFix
                | AlgoId::Eorl0500
                | AlgoId::Eorl0505
                | AlgoId::Eorl1005
                | AlgoId::EorlActv
        )
    }
}

/// Default epsilon decay for the episode counts used in the report tables.
pub fn default_decay(episodes: usize) -> Option<f64> {
    match episodes {
        400 => Some(0.99),
        1000 => Some(0.995),
        2500 => Some(0.998),
        4000 => Some(0.999),
        _ => None,
    }
}

/// Full parameterisation of one training run (excluding the seed).
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub algo: AlgoId,
    pub episodes: usize,
    pub decay: f64,
    /// Population size for population algorithms; single-policy baselines
    /// always run one.
    pub n: usize,
    /// Samples drawn from the buffer per training epoch.
    pub batch_size: usize,
    /// SGD step granularity within an epoch's sample.
    pub minibatch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub buffer_factor: usize,
    pub sigma: f64,
    pub q: f64,
    pub per_alpha: f64,
    pub per_beta: (f64, f64),
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn new(env: EnvSpec, algo: AlgoId, episodes: usize, decay: f64) -> Self {
        Self {
            env,
            algo,
            episodes,
            decay,
            n: 8,
            batch_size: 4096,
            minibatch_size: 32,
            epochs: 2,
            learning_rate: 0.01,
            buffer_factor: 100,
            sigma: 0.25,
            q: 0.9,
            per_alpha: 0.6,
            per_beta: (0.4, 1.0),
            master_seed: 0,
        }
    }

    pub fn effective_n(&self) -> usize {
        if self.algo.is_population() {
            self.n
        } else {
            1
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if self.episodes == 0 {
            return Err(Error::Config("episodes must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(Error::Config("decay must be in [0, 1]".into()));
        }
        if self.n == 0
            || self.batch_size == 0
            || self.minibatch_size == 0
            || self.epochs == 0
            || self.buffer_factor == 0
        {
            return Err(Error::Config(
                "n, batch_size, minibatch_size, epochs and buffer_factor must be >= 1".into(),
            ));
        }
        if self.sigma < 0.0 {
            return Err(Error::Config("sigma must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.q) {
            return Err(Error::Config("q must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Parse a flat `key=value` config file (one pair per line, `#` comments).
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected key=value, got {line:?}",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Seed list syntax: a bare integer `N` means seed indices `0..N`; a
/// comma-separated list names explicit indices.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = |_| Error::Config(format!("invalid seeds spec {s:?}"));
    if s.contains(',') {
        s.split(',').map(|p| p.trim().parse::<u64>().map_err(bad)).collect()
    } else {
        let n: u64 = s.trim().parse().map_err(bad)?;
        Ok((0..n).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_ids_round_trip() {
        let specs = [
            EnvSpec::bitflip(6, false),
            EnvSpec::bitflip(10, true),
            EnvSpec::grid(8, Subgoals::Zero, 0.0),
            EnvSpec::grid(80, Subgoals::TwoPlus, 0.1),
            EnvSpec::grid(12, Subgoals::TwoMinus, 0.2),
        ];
        for spec in specs {
            let id = spec.config_id();
            let parsed = EnvSpec::parse_id(&id).unwrap();
            assert_eq!(parsed, spec, "id {id}");
        }
        assert_eq!(EnvSpec::grid(8, Subgoals::Zero, 0.1).config_id(), "grid_m8_sub0_p0.10");
        assert!(EnvSpec::parse_id("nonsense").is_none());
    }

    #[test]
    fn algorithm_ids_map_to_unique_rate_triples() {
        assert_eq!(AlgoId::parse("eorl-05-00").unwrap(), AlgoId::Eorl0500);
        assert_eq!(AlgoId::Eorl0500.rates(), (Scheme::UniformRandom, 0.05, 0.0));
        assert_eq!(AlgoId::Eorl0505.rates(), (Scheme::UniformRandom, 0.05, 0.05));
        assert_eq!(AlgoId::Eorl1005.rates(), (Scheme::UniformRandom, 0.1, 0.05));
        assert_eq!(AlgoId::EorlActv.rates().0, Scheme::ActiveRandom);
        assert_eq!(AlgoId::EorlFix.rates(), (Scheme::Fixed, 0.0, 0.0));
        assert_eq!(AlgoId::Van.rates(), (Scheme::Fixed, 0.0, 0.0));
        for a in AlgoId::all() {
            assert_eq!(AlgoId::parse(a.as_str()).unwrap(), a);
            assert_eq!(AlgoId::from_column(a.column()), Some(a));
        }
    }

    #[test]
    fn single_policy_baselines_force_n_one() {
        let cfg = ExperimentConfig::new(EnvSpec::bitflip(6, false), AlgoId::Van, 400, 0.99);
        assert_eq!(cfg.effective_n(), 1);
        let cfg = ExperimentConfig::new(EnvSpec::bitflip(6, false), AlgoId::EorlFix, 400, 0.99);
        assert_eq!(cfg.effective_n(), 8);
    }

    #[test]
    fn decay_defaults_follow_episode_counts() {
        assert_eq!(default_decay(400), Some(0.99));
        assert_eq!(default_decay(1000), Some(0.995));
        assert_eq!(default_decay(2500), Some(0.998));
        assert_eq!(default_decay(4000), Some(0.999));
        assert_eq!(default_decay(123), None);
    }

    #[test]
    fn kv_parsing_handles_comments_and_errors() {
        let map = parse_kv("# comment\nenv=bitflip\n size = 6 \n\nalgo=van\n").unwrap();
        assert_eq!(map["env"], "bitflip");
        assert_eq!(map["size"], "6");
        assert!(parse_kv("not a pair").is_err());
    }

    #[test]
    fn seed_specs_expand() {
        assert_eq!(parse_seeds("3").unwrap(), vec![0, 1, 2]);
        assert_eq!(parse_seeds("0,4,9").unwrap(), vec![0, 4, 9]);
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn env_validation_rejects_bad_combinations() {
        assert!(EnvSpec::grid(8, Subgoals::TwoPlus, 0.2).validate().is_ok());
        assert!(EnvSpec {
            kind: EnvKind::BitFlip,
            size: 6,
            subgoals: Subgoals::TwoPlus,
            stochasticity: 0.0
        }
        .validate()
        .is_err());
        assert!(EnvSpec::grid(1, Subgoals::Zero, 0.0).validate().is_err());
        assert!(EnvSpec::grid(8, Subgoals::Zero, 1.5).validate().is_err());
    }
}
