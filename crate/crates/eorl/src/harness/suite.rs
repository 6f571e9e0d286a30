//! The full experiment grids behind the report tables.

use crate::config::{EnvSpec, Subgoals};

/// One grid entry: environment, episode count, epsilon decay.
pub type SuiteEntry = (EnvSpec, usize, f64);

/// 1D bit-flipping table: sizes 6..=10, each with and without the subgoal.
/// 10 rows at 400 episodes, decay 0.99.
pub fn bitflip_table() -> Vec<SuiteEntry> {
    let mut out = Vec::new();
    for subgoal in [false, true] {
        for m in 6..=10 {
            out.push((EnvSpec::bitflip(m, subgoal), 400, 0.99));
        }
    }
    out
}

/// 2D grid table: 56 rows over subgoal variants, stochasticity levels, and
/// sizes, with episode counts (and their matching decay rates) increasing
/// for the harder two-subgoal variants.
pub fn grid_table() -> Vec<SuiteEntry> {
    let mut out = Vec::new();
    let all_sizes = [8, 12, 16, 20, 40, 60, 80];
    for subgoals in [Subgoals::Zero, Subgoals::One] {
        for p in [0.0, 0.1, 0.2] {
            for m in all_sizes {
                out.push((EnvSpec::grid(m, subgoals, p), 1000, 0.995));
            }
        }
    }
    for m in [8, 12, 16, 20] {
        out.push((EnvSpec::grid(m, Subgoals::TwoPlus, 0.0), 2500, 0.998));
    }
    for m in [40, 60] {
        out.push((EnvSpec::grid(m, Subgoals::TwoPlus, 0.0), 4000, 0.999));
    }
    for m in [8, 12, 16, 20] {
        out.push((EnvSpec::grid(m, Subgoals::TwoPlus, 0.1), 2500, 0.998));
    }
    for m in [8, 12, 16, 20] {
        out.push((EnvSpec::grid(m, Subgoals::TwoMinus, 0.0), 2500, 0.998));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_decay;
    use std::collections::BTreeSet;

    #[test]
    fn bitflip_table_has_ten_distinct_rows() {
        let rows = bitflip_table();
        assert_eq!(rows.len(), 10);
        let ids: BTreeSet<String> = rows.iter().map(|(e, _, _)| e.config_id()).collect();
        assert_eq!(ids.len(), 10);
        assert!(rows.iter().all(|(e, ep, d)| {
            e.validate().is_ok() && *ep == 400 && *d == 0.99
        }));
    }

    #[test]
    fn grid_table_has_fifty_six_distinct_rows_with_matching_decays() {
        let rows = grid_table();
        assert_eq!(rows.len(), 56);
        let ids: BTreeSet<String> = rows.iter().map(|(e, _, _)| e.config_id()).collect();
        assert_eq!(ids.len(), 56);
        for (env, episodes, decay) in &rows {
            env.validate().unwrap();
            assert_eq!(default_decay(*episodes), Some(*decay));
        }
    }
}
