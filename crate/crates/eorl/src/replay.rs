//! Shared FIFO experience buffer with Monte-Carlo returns, uniform sampling,
//! and proportional prioritized sampling.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// One stored experience: the regression target is the undiscounted return
/// from this step to the end of its episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub mc_return: f64,
}

/// Compute per-step returns `G_t = sum of rewards from t onward` for a full
/// episode (terminal reward already folded into the last step's reward).
pub fn finalize_episode(trajectory: &[(Vec<f64>, usize, f64)]) -> Vec<Transition> {
    let mut out = Vec::with_capacity(trajectory.len());
    let mut suffix = 0.0;
    for (state, action, reward) in trajectory.iter().rev() {
        suffix += reward;
        out.push(Transition {
            state: state.clone(),
            action: *action,
            mc_return: suffix,
        });
    }
    out.reverse();
    out
}

/// Fixed-capacity FIFO ring shared by every policy in a run. Slot indices
/// are physical ring positions and stay valid until the slot is overwritten.
#[derive(Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    storage: Vec<Transition>,
    priorities: Vec<f64>,
    /// Next slot to overwrite once the ring is full.
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "buffer capacity must be positive");
        Self {
            capacity,
            storage: Vec::with_capacity(capacity.min(1 << 20)),
            priorities: Vec::with_capacity(capacity.min(1 << 20)),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn get(&self, slot: usize) -> &Transition {
        &self.storage[slot]
    }

    pub fn priority(&self, slot: usize) -> f64 {
        self.priorities[slot]
    }

    /// Append transitions, evicting oldest-first once full. New entries take
    /// the current maximum priority (1 when the buffer is empty).
    pub fn push(&mut self, transitions: impl IntoIterator<Item = Transition>) {
        for t in transitions {
            let p = self.max_priority().unwrap_or(1.0);
            if self.storage.len() < self.capacity {
                self.storage.push(t);
                self.priorities.push(p);
            } else {
                self.storage[self.next] = t;
                self.priorities[self.next] = p;
                self.next = (self.next + 1) % self.capacity;
            }
        }
    }

    fn max_priority(&self) -> Option<f64> {
        self.priorities.iter().copied().reduce(f64::max)
    }

    /// `batch_size` independent draws with replacement.
    pub fn sample_uniform(&self, batch_size: usize, rng: &mut Rng) -> Result<Vec<&Transition>> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        Ok((0..batch_size)
            .map(|_| &self.storage[rng.random_range(0..self.storage.len())])
            .collect())
    }

    /// Proportional prioritized sampling: `P(i) ~ priority_i^alpha`, with
    /// importance weights `(N * P(i))^-beta` normalized by the largest
    /// weight over the whole buffer.
    pub fn sample_prioritized(
        &self,
        batch_size: usize,
        alpha: f64,
        beta: f64,
        rng: &mut Rng,
    ) -> Result<(Vec<&Transition>, Vec<f64>, Vec<usize>)> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let n = self.storage.len();
        let mut cumulative = Vec::with_capacity(n);
        let mut total = 0.0;
        for &p in &self.priorities {
            total += p.powf(alpha);
            cumulative.push(total);
        }

        let mut batch = Vec::with_capacity(batch_size);
        let mut indices = Vec::with_capacity(batch_size);
        let mut probs = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let u = rng.random_range(0.0..total);
            let slot = cumulative.partition_point(|&c| c <= u).min(n - 1);
            let mass = cumulative[slot] - if slot == 0 { 0.0 } else { cumulative[slot - 1] };
            batch.push(&self.storage[slot]);
            indices.push(slot);
            probs.push(mass / total);
        }

        let min_mass = self
            .priorities
            .iter()
            .map(|p| p.powf(alpha))
            .fold(f64::INFINITY, f64::min);
        let max_weight = (n as f64 * min_mass / total).powf(-beta);
        let weights = probs
            .iter()
            .map(|&p| (n as f64 * p).powf(-beta) / max_weight)
            .collect();
        Ok((batch, weights, indices))
    }

    /// Refresh priorities after a training step; indices past the current
    /// size refer to evicted slots and are ignored.
    pub fn update_priorities(&mut self, slot_indices: &[usize], errors: &[f64]) {
        for (&slot, &err) in slot_indices.iter().zip(errors) {
            if slot < self.priorities.len() {
                self.priorities[slot] = err.abs() + 1e-6;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, STREAM_LOOP};
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn t(v: f64) -> Transition {
        Transition {
            state: vec![v],
            action: 0,
            mc_return: v,
        }
    }

    #[test]
    fn finalize_matches_bitflip_hand_example() {
        // 3-step m=6 episode ending at the goal: every step pays -1/30 and
        // the last one adds +10.
        let step = -1.0 / 30.0;
        let traj = vec![
            (vec![0.0], 0, step),
            (vec![1.0], 1, step),
            (vec![2.0], 2, step + 10.0),
        ];
        let out = finalize_episode(&traj);
        assert!((out[0].mc_return - 9.9).abs() < 1e-12);
        assert!((out[2].mc_return - (10.0 - 1.0 / 30.0)).abs() < 1e-12);
    }

    #[test]
    fn finalize_single_step_is_identity() {
        let out = finalize_episode(&[(vec![0.0], 3, -0.25)]);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].mc_return, -0.25);
        assert_eq!(out[0].action, 3);
    }

    #[test]
    fn finalize_matches_bruteforce_suffix_sums() {
        let mut rng = stream_rng(1, STREAM_LOOP, 0);
        let rewards: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let traj: Vec<(Vec<f64>, usize, f64)> =
            rewards.iter().map(|&r| (vec![r], 0, r)).collect();
        let out = finalize_episode(&traj);
        for i in 0..rewards.len() {
            let oracle: f64 = rewards[i..].iter().sum();
            assert!((out[i].mc_return - oracle).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn suffix_sum_recurrence_holds(rewards in proptest::collection::vec(-10.0f64..10.0, 1..40)) {
            let traj: Vec<(Vec<f64>, usize, f64)> =
                rewards.iter().map(|&r| (vec![], 0, r)).collect();
            let out = finalize_episode(&traj);
            for i in 0..out.len() - 1 {
                prop_assert!((out[i].mc_return - (rewards[i] + out[i + 1].mc_return)).abs() < 1e-9);
            }
        }

        #[test]
        fn capacity_bound_holds_under_arbitrary_pushes(lens in proptest::collection::vec(0usize..12, 0..20)) {
            let mut buf = ReplayBuffer::new(7);
            for (i, len) in lens.iter().enumerate() {
                buf.push((0..*len).map(|j| t((i * 100 + j) as f64)));
                prop_assert!(buf.len() <= 7);
            }
        }
    }

    #[test]
    fn push_evicts_oldest_first() {
        let mut buf = ReplayBuffer::new(3);
        buf.push([t(0.0), t(1.0), t(2.0), t(3.0)]);
        let vals: Vec<f64> = (0..3).map(|i| buf.get(i).mc_return).collect();
        // Slot 0 was overwritten by the fourth item.
        assert_eq!(vals, vec![3.0, 1.0, 2.0]);
        assert_eq!(buf.len(), 3);
    }

    #[test]
    fn first_push_gets_priority_one_and_entries_are_untouched() {
        let mut buf = ReplayBuffer::new(4);
        buf.push([t(1.0)]);
        assert_eq!(buf.priority(0), 1.0);
        buf.update_priorities(&[0], &[4.0]);
        let before = buf.get(0).clone();
        buf.push([t(2.0)]);
        assert_eq!(buf.get(0), &before);
        // New entries inherit the current max priority.
        assert_eq!(buf.priority(1), 4.0 + 1e-6);
    }

    #[test]
    fn sampling_single_item_buffer_repeats_it() {
        let mut buf = ReplayBuffer::new(8);
        buf.push([t(7.0)]);
        let mut rng = stream_rng(2, STREAM_LOOP, 0);
        let batch = buf.sample_uniform(4096, &mut rng).unwrap();
        assert_eq!(batch.len(), 4096);
        assert!(batch.iter().all(|s| s.mc_return == 7.0));
    }

    #[test]
    fn sampling_empty_buffer_fails() {
        let buf = ReplayBuffer::new(4);
        let mut rng = stream_rng(3, STREAM_LOOP, 0);
        assert!(matches!(buf.sample_uniform(1, &mut rng), Err(Error::EmptyBuffer)));
        assert!(buf.sample_prioritized(1, 0.6, 0.4, &mut rng).is_err());
    }

    #[test]
    fn distinct_streams_give_distinct_batches() {
        let mut buf = ReplayBuffer::new(100);
        buf.push((0..100).map(|i| t(i as f64)));
        let a: Vec<f64> = buf
            .sample_uniform(32, &mut stream_rng(4, STREAM_LOOP, 0))
            .unwrap()
            .iter()
            .map(|s| s.mc_return)
            .collect();
        let b: Vec<f64> = buf
            .sample_uniform(32, &mut stream_rng(4, STREAM_LOOP, 1))
            .unwrap()
            .iter()
            .map(|s| s.mc_return)
            .collect();
        assert_ne!(a, b);
    }

    #[test]
    fn uniform_sampling_passes_chi_square() {
        let mut buf = ReplayBuffer::new(100);
        buf.push((0..100).map(|i| t(i as f64)));
        let mut rng = stream_rng(5, STREAM_LOOP, 0);
        let draws = 1_000_000usize;
        let mut counts = [0u64; 100];
        for s in buf.sample_uniform(draws, &mut rng).unwrap() {
            counts[s.mc_return as usize] += 1;
        }
        let expected = draws as f64 / 100.0;
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let crit = ChiSquared::new(99.0).unwrap().inverse_cdf(0.999);
        assert!(stat < crit, "chi-square {stat} >= {crit} (p <= 0.001)");
    }

    #[test]
    fn prioritized_ratio_follows_priorities() {
        let mut buf = ReplayBuffer::new(2);
        buf.push([t(0.0), t(1.0)]);
        buf.update_priorities(&[0, 1], &[1.0 - 1e-6, 2.0 - 1e-6]);
        let mut rng = stream_rng(6, STREAM_LOOP, 0);
        let draws = 1_000_000usize;
        let (_, _, idx) = buf.sample_prioritized(draws, 1.0, 1.0, &mut rng).unwrap();
        let ones = idx.iter().filter(|&&i| i == 1).count() as f64 / draws as f64;
        assert!((ones - 2.0 / 3.0).abs() < 0.005, "P(item 1) = {ones}");
    }

    #[test]
    fn equal_priorities_give_unit_weights() {
        let mut buf = ReplayBuffer::new(10);
        buf.push((0..10).map(|i| t(i as f64)));
        let mut rng = stream_rng(7, STREAM_LOOP, 0);
        let (_, weights, _) = buf.sample_prioritized(64, 0.6, 0.7, &mut rng).unwrap();
        assert!(weights.iter().all(|&w| (w - 1.0).abs() < 1e-12));
    }

    #[test]
    fn beta_one_weights_match_formula() {
        let mut buf = ReplayBuffer::new(4);
        buf.push((0..4).map(|i| t(i as f64)));
        buf.update_priorities(&[0, 1, 2, 3], &[1.0, 2.0, 3.0, 4.0]);
        let mut rng = stream_rng(8, STREAM_LOOP, 0);
        let (_, weights, idx) = buf.sample_prioritized(256, 1.0, 1.0, &mut rng).unwrap();
        let total: f64 = (0..4).map(|i| buf.priority(i)).sum();
        let n = 4.0;
        let min_p = buf.priority(0) / total;
        let wmax = (n * min_p).powf(-1.0);
        for (w, &i) in weights.iter().zip(&idx) {
            let p = buf.priority(i) / total;
            let expect = (n * p).powf(-1.0) / wmax;
            assert!((w - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn alpha_zero_matches_uniform_distribution() {
        let mut buf = ReplayBuffer::new(50);
        buf.push((0..50).map(|i| t(i as f64)));
        buf.update_priorities(&(0..50).collect::<Vec<_>>(), &(0..50).map(|i| i as f64).collect::<Vec<_>>());
        let mut rng = stream_rng(9, STREAM_LOOP, 0);
        let draws = 200_000usize;
        let (_, weights, idx) = buf.sample_prioritized(draws, 0.0, 0.5, &mut rng).unwrap();
        assert!(weights.iter().all(|&w| (w - 1.0).abs() < 1e-12));
        let mut counts = [0u64; 50];
        for &i in &idx {
            counts[i] += 1;
        }
        let expected = draws as f64 / 50.0;
        let stat: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let crit = ChiSquared::new(49.0).unwrap().inverse_cdf(0.999);
        assert!(stat < crit);
    }

    #[test]
    fn priority_updates_apply_abs_plus_epsilon_and_ignore_stale() {
        let mut buf = ReplayBuffer::new(10);
        buf.push([t(0.0), t(1.0)]);
        buf.update_priorities(&[0, 1, 5], &[0.0, -3.0, 9.0]);
        assert_eq!(buf.priority(0), 1e-6);
        assert_eq!(buf.priority(1), 3.0 + 1e-6);
        assert_eq!(buf.len(), 2);
    }
}
