//! Count-based exploration bonus: stored training rewards are augmented with
//! `1 / sqrt(1 + N(s, a))`; reported returns always use true rewards.

use std::collections::HashMap;

/// Lifetime visit counts per (state, action). Both environments emit exactly
/// reproducible observation values, so keying on the raw bit patterns counts
/// discrete states exactly.
#[derive(Debug, Default)]
pub struct VisitCounts {
    counts: HashMap<(Vec<u64>, usize), u64>,
}

impl VisitCounts {
    pub fn new() -> Self {
        Self::default()
    }

    fn key(state: &[f64], action: usize) -> (Vec<u64>, usize) {
        (state.iter().map(|v| v.to_bits()).collect(), action)
    }

    pub fn count(&self, state: &[f64], action: usize) -> u64 {
        self.counts.get(&Self::key(state, action)).copied().unwrap_or(0)
    }

    /// Bonus for the current visit, then increment the count.
    pub fn bonus_and_increment(&mut self, state: &[f64], action: usize) -> f64 {
        let n = self.counts.entry(Self::key(state, action)).or_insert(0);
        let bonus = 1.0 / (1.0 + *n as f64).sqrt();
        *n += 1;
        bonus
    }
}

/// Augmented reward `r + 1/sqrt(1 + N(s,a))`, incrementing the count.
pub fn cbe_augment(reward: f64, state: &[f64], action: usize, counts: &mut VisitCounts) -> f64 {
    reward + counts.bonus_and_increment(state, action)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_visit_bonus_is_one() {
        let mut counts = VisitCounts::new();
        let r = cbe_augment(-0.05, &[0.0, 1.0], 2, &mut counts);
        assert!((r - (-0.05 + 1.0)).abs() < 1e-15);
        assert_eq!(counts.count(&[0.0, 1.0], 2), 1);
    }

    #[test]
    fn fourth_visit_bonus_is_half() {
        let mut counts = VisitCounts::new();
        for _ in 0..3 {
            counts.bonus_and_increment(&[1.0], 0);
        }
        let r = cbe_augment(0.0, &[1.0], 0, &mut counts);
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn counts_distinguish_states_and_actions() {
        let mut counts = VisitCounts::new();
        counts.bonus_and_increment(&[0.5, 0.5], 0);
        assert_eq!(counts.count(&[0.5, 0.5], 1), 0);
        assert_eq!(counts.count(&[0.5, 0.25], 0), 0);
        assert_eq!(counts.count(&[0.5, 0.5], 0), 1);
    }
}
