//! 1D bit-flipping: start at all zeros, goal at all ones, one action per bit.

use crate::envs::{DoneReason, StepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BitFlipEnv {
    m: usize,
    subgoal_enabled: bool,
    current: Vec<bool>,
    visited_subgoal: bool,
    steps_taken: usize,
    done: bool,
}

impl BitFlipEnv {
    pub fn new(m: usize, subgoal_enabled: bool) -> Self {
        assert!(m >= 1, "bit count must be >= 1");
        Self {
            m,
            subgoal_enabled,
            current: vec![false; m],
            visited_subgoal: false,
            steps_taken: 0,
            done: true,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.m
    }

    pub fn timeout(&self) -> usize {
        5 * self.m
    }

    pub fn reset(&mut self) -> Vec<f64> {
        self.current.iter_mut().for_each(|b| *b = false);
        self.visited_subgoal = false;
        self.steps_taken = 0;
        self.done = false;
        self.observation()
    }

    pub fn observation(&self) -> Vec<f64> {
        self.current.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }

    pub fn goal_observation(&self) -> Vec<f64> {
        vec![1.0; self.m]
    }

    /// The subgoal is the alternating pattern starting with 0 (0101 for
    /// m = 4, 01010 for m = 5).
    fn at_subgoal(&self) -> bool {
        self.current.iter().enumerate().all(|(i, &b)| b == (i % 2 == 1))
    }

    pub fn step(&mut self, action: usize) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        if action >= self.m {
            return Err(Error::ActionOutOfRange {
                action,
                n_actions: self.m,
            });
        }
        self.current[action] = !self.current[action];
        self.steps_taken += 1;
        if self.subgoal_enabled && self.at_subgoal() {
            self.visited_subgoal = true;
        }

        let mut reward = -1.0 / (5 * self.m) as f64;
        if self.current.iter().all(|&b| b) {
            reward += if !self.subgoal_enabled || self.visited_subgoal {
                10.0
            } else {
                1.0
            };
            self.done = true;
            return Ok(StepResult::finished(self.observation(), reward, DoneReason::Goal));
        }
        if self.steps_taken >= self.timeout() {
            self.done = true;
            return Ok(StepResult::finished(self.observation(), reward, DoneReason::Timeout));
        }
        Ok(StepResult::running(self.observation(), reward))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_gives_all_zero_observation() {
        let mut env = BitFlipEnv::new(6, false);
        assert_eq!(env.reset(), vec![0.0; 6]);
        assert_eq!(env.reset(), vec![0.0; 6]);
    }

    #[test]
    fn reset_clears_flags_from_prior_episode() {
        let mut env = BitFlipEnv::new(4, true);
        env.reset();
        env.step(1).unwrap();
        env.step(3).unwrap(); // 0101: subgoal
        assert!(env.visited_subgoal);
        env.reset();
        assert!(!env.visited_subgoal);
        assert_eq!(env.steps_taken, 0);
    }

    #[test]
    fn plain_goal_pays_step_penalty_plus_ten() {
        let mut env = BitFlipEnv::new(4, false);
        env.reset();
        for bit in 0..3 {
            let r = env.step(bit).unwrap();
            assert!((r.reward - (-1.0 / 20.0)).abs() < 1e-15);
            assert!(!r.done);
        }
        let last = env.step(3).unwrap();
        assert!((last.reward - (10.0 - 1.0 / 20.0)).abs() < 1e-15);
        assert_eq!(last.done_reason, Some(DoneReason::Goal));
    }

    #[test]
    fn subgoal_variant_pays_ten_via_subgoal_and_one_direct() {
        // Through 0101 then to 1111.
        let mut env = BitFlipEnv::new(4, true);
        env.reset();
        env.step(1).unwrap();
        env.step(3).unwrap(); // 0101
        env.step(0).unwrap(); // 1101
        let last = env.step(2).unwrap(); // 1111
        assert_eq!(last.done_reason, Some(DoneReason::Goal));
        assert!((last.reward - (10.0 - 1.0 / 20.0)).abs() < 1e-15);

        // Direct path never touches 0101.
        let mut env = BitFlipEnv::new(4, true);
        env.reset();
        for bit in 0..3 {
            env.step(bit).unwrap();
        }
        let last = env.step(3).unwrap();
        assert!((last.reward - (1.0 - 1.0 / 20.0)).abs() < 1e-15);
    }

    #[test]
    fn odd_width_subgoal_pattern_ends_with_zero() {
        // m = 5: pattern 01010.
        let mut env = BitFlipEnv::new(5, true);
        env.reset();
        env.step(1).unwrap();
        env.step(3).unwrap();
        assert!(env.visited_subgoal);
    }

    #[test]
    fn timeout_after_5m_non_goal_flips() {
        let mut env = BitFlipEnv::new(4, false);
        env.reset();
        let mut last = None;
        for _ in 0..20 {
            last = Some(env.step(0).unwrap());
        }
        let last = last.unwrap();
        assert_eq!(last.done_reason, Some(DoneReason::Timeout));
        assert!((last.reward - (-1.0 / 20.0)).abs() < 1e-15);
        assert!(env.step(0).is_err());
    }

    #[test]
    fn full_timeout_penalties_sum_to_minus_one() {
        let mut env = BitFlipEnv::new(6, false);
        env.reset();
        let mut total = 0.0;
        for _ in 0..30 {
            total += env.step(0).unwrap().reward;
        }
        assert!((total - (-1.0)).abs() < 1e-9);
    }

    #[test]
    fn action_out_of_range_is_rejected() {
        let mut env = BitFlipEnv::new(4, false);
        env.reset();
        assert!(matches!(
            env.step(4),
            Err(Error::ActionOutOfRange { action: 4, n_actions: 4 })
        ));
    }
}
