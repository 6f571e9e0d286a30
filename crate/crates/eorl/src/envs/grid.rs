//! 2D grid navigation: spawn at [1,1], goal at [m,m], optional subgoals at
//! the off-diagonal corners [1,m] and [m,1].

use rand::Rng as _;

use crate::envs::{DoneReason, StepResult};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// How the two subgoal corners affect the terminal reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    /// Subgoals inert; +10 at the goal.
    Sub0,
    /// +10 if the first subgoal was visited, +1 otherwise.
    Sub1,
    /// +10 for both subgoals, +2 for exactly one, +1 for none.
    Sub2Plus,
    /// +10 for both subgoals, -1 for exactly one, +1 for none.
    Sub2Minus,
}

pub const UP: usize = 0;
pub const DOWN: usize = 1;
pub const LEFT: usize = 2;
pub const RIGHT: usize = 3;

#[derive(Debug, Clone)]
pub struct GridEnv {
    m: usize,
    mode: GridMode,
    stochasticity: f64,
    x: usize,
    y: usize,
    visited_i1: bool,
    visited_i2: bool,
    steps_taken: usize,
    done: bool,
}

impl GridEnv {
    pub fn new(m: usize, mode: GridMode, stochasticity: f64) -> Self {
        assert!(m >= 2, "grid side must be >= 2");
        assert!((0.0..=1.0).contains(&stochasticity));
        Self {
            m,
            mode,
            stochasticity,
            x: 1,
            y: 1,
            visited_i1: false,
            visited_i2: false,
            steps_taken: 0,
            done: true,
        }
    }

    /// 10x the length of the direct shortest path.
    pub fn timeout(&self) -> usize {
        10 * 2 * (self.m - 1)
    }

    pub fn reset(&mut self) -> Vec<f64> {
        self.x = 1;
        self.y = 1;
        self.visited_i1 = false;
        self.visited_i2 = false;
        self.steps_taken = 0;
        self.done = false;
        self.observation()
    }

    pub fn observation(&self) -> Vec<f64> {
        let m = self.m as f64;
        vec![
            self.x as f64 / m,
            self.y as f64 / m,
            if self.visited_i1 { 1.0 } else { 0.0 },
            if self.visited_i2 { 1.0 } else { 0.0 },
        ]
    }

    pub fn goal_observation(&self) -> Vec<f64> {
        vec![1.0, 1.0, 0.0, 0.0]
    }

    fn terminal_bonus(&self) -> f64 {
        let both = self.visited_i1 && self.visited_i2;
        let one = self.visited_i1 ^ self.visited_i2;
        match self.mode {
            GridMode::Sub0 => 10.0,
            GridMode::Sub1 => {
                if self.visited_i1 {
                    10.0
                } else {
                    1.0
                }
            }
            GridMode::Sub2Plus => {
                if both {
                    10.0
                } else if one {
                    2.0
                } else {
                    1.0
                }
            }
            GridMode::Sub2Minus => {
                if both {
                    10.0
                } else if one {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }

    /// One move. With probability `stochasticity` the effective direction is
    /// redrawn uniformly from all four; moves off the edge have no effect.
    pub fn step(&mut self, action: usize, rng: &mut Rng) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        if action >= 4 {
            return Err(Error::ActionOutOfRange { action, n_actions: 4 });
        }

        let effective = if self.stochasticity > 0.0 {
            let u: f64 = rng.random();
            if u < self.stochasticity {
                rng.random_range(0..4)
            } else {
                action
            }
        } else {
            action
        };

        match effective {
            UP => self.y = (self.y + 1).min(self.m),
            DOWN => self.y = self.y.saturating_sub(1).max(1),
            LEFT => self.x = self.x.saturating_sub(1).max(1),
            RIGHT => self.x = (self.x + 1).min(self.m),
            _ => unreachable!(),
        }
        self.steps_taken += 1;
        if self.x == 1 && self.y == self.m {
            self.visited_i1 = true;
        }
        if self.x == self.m && self.y == 1 {
            self.visited_i2 = true;
        }

        let mut reward = -1.0 / self.timeout() as f64;
        if self.x == self.m && self.y == self.m {
            reward += self.terminal_bonus();
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
    use crate::rng::{stream_rng, STREAM_LOOP};

    fn det(m: usize, mode: GridMode) -> (GridEnv, Rng) {
        let mut env = GridEnv::new(m, mode, 0.0);
        env.reset();
        (env, stream_rng(0, STREAM_LOOP, 0))
    }

    #[test]
    fn reset_observation_is_normalised_origin() {
        let mut env = GridEnv::new(8, GridMode::Sub0, 0.0);
        assert_eq!(env.reset(), vec![1.0 / 8.0, 1.0 / 8.0, 0.0, 0.0]);
    }

    #[test]
    fn edge_moves_have_no_effect() {
        let (mut env, mut rng) = det(4, GridMode::Sub0);
        let r = env.step(LEFT, &mut rng).unwrap();
        assert_eq!(r.observation[0], 0.25);
        assert_eq!(r.observation[1], 0.25);
        assert!((r.reward - (-1.0 / 60.0)).abs() < 1e-15);
        let r = env.step(DOWN, &mut rng).unwrap();
        assert_eq!(r.observation[..2], [0.25, 0.25]);
    }

    #[test]
    fn sub2plus_one_subgoal_pays_two() {
        let (mut env, mut rng) = det(4, GridMode::Sub2Plus);
        for _ in 0..3 {
            env.step(UP, &mut rng).unwrap(); // to I1 = [1,4]
        }
        assert!(env.visited_i1);
        let mut last = None;
        for _ in 0..3 {
            last = Some(env.step(RIGHT, &mut rng).unwrap());
        }
        let last = last.unwrap();
        assert_eq!(last.done_reason, Some(DoneReason::Goal));
        assert!((last.reward - (2.0 - 1.0 / 60.0)).abs() < 1e-12);
    }

    #[test]
    fn sub2minus_one_subgoal_pays_minus_one_and_none_pays_one() {
        let (mut env, mut rng) = det(4, GridMode::Sub2Minus);
        for _ in 0..3 {
            env.step(UP, &mut rng).unwrap();
        }
        let mut last = None;
        for _ in 0..3 {
            last = Some(env.step(RIGHT, &mut rng).unwrap());
        }
        assert!((last.unwrap().reward - (-1.0 - 1.0 / 60.0)).abs() < 1e-12);

        // Staircase path avoids both corners.
        let (mut env, mut rng) = det(4, GridMode::Sub2Minus);
        let mut last = None;
        for _ in 0..3 {
            env.step(RIGHT, &mut rng).unwrap();
            last = Some(env.step(UP, &mut rng).unwrap());
        }
        let last = last.unwrap();
        assert_eq!(last.done_reason, Some(DoneReason::Goal));
        assert!((last.reward - (1.0 - 1.0 / 60.0)).abs() < 1e-12);
        assert!(!env.visited_i1 && !env.visited_i2);
    }

    #[test]
    fn both_subgoals_pay_ten_in_two_subgoal_modes() {
        for mode in [GridMode::Sub2Plus, GridMode::Sub2Minus] {
            let (mut env, mut rng) = det(3, mode);
            for _ in 0..2 {
                env.step(UP, &mut rng).unwrap(); // I1
            }
            for _ in 0..2 {
                env.step(DOWN, &mut rng).unwrap();
            }
            for _ in 0..2 {
                env.step(RIGHT, &mut rng).unwrap(); // I2
            }
            let mut last = None;
            for _ in 0..2 {
                last = Some(env.step(UP, &mut rng).unwrap());
            }
            let last = last.unwrap();
            assert_eq!(last.done_reason, Some(DoneReason::Goal));
            assert!((last.reward - (10.0 - 1.0 / 40.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn sub1_ignores_second_subgoal() {
        let (mut env, mut rng) = det(3, GridMode::Sub1);
        for _ in 0..2 {
            env.step(RIGHT, &mut rng).unwrap(); // I2 only
        }
        let mut last = None;
        for _ in 0..2 {
            last = Some(env.step(UP, &mut rng).unwrap());
        }
        assert!((last.unwrap().reward - (1.0 - 1.0 / 40.0)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_when_stochasticity_is_zero() {
        let run = || {
            let (mut env, mut rng) = det(5, GridMode::Sub0);
            let mut obs = Vec::new();
            for a in [UP, RIGHT, RIGHT, UP, LEFT, DOWN, RIGHT, UP] {
                obs.push(env.step(a, &mut rng).unwrap().observation);
            }
            obs
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn full_stochasticity_hits_each_direction_quarter_of_the_time() {
        let mut env = GridEnv::new(9, GridMode::Sub0, 1.0);
        let mut rng = stream_rng(21, STREAM_LOOP, 0);
        let mut counts = [0u64; 4];
        let trials = 100_000;
        for _ in 0..trials {
            env.reset();
            // Park in the middle so every direction moves.
            env.stochasticity = 0.0;
            for _ in 0..4 {
                env.step(UP, &mut rng).unwrap();
                env.step(RIGHT, &mut rng).unwrap();
            }
            env.stochasticity = 1.0;
            let before = (env.x, env.y);
            env.step(UP, &mut rng).unwrap();
            let after = (env.x, env.y);
            let dir = match (
                after.0 as i64 - before.0 as i64,
                after.1 as i64 - before.1 as i64,
            ) {
                (0, 1) => UP,
                (0, -1) => DOWN,
                (-1, 0) => LEFT,
                (1, 0) => RIGHT,
                other => panic!("unexpected move {other:?}"),
            };
            counts[dir] += 1;
        }
        for &c in &counts {
            let f = c as f64 / trials as f64;
            assert!((f - 0.25).abs() < 0.01, "direction frequency {f}");
        }
    }

    #[test]
    fn timeout_episode_total_reward_is_minus_one() {
        let (mut env, mut rng) = det(4, GridMode::Sub0);
        let mut total = 0.0;
        let mut steps = 0;
        loop {
            let r = env.step(LEFT, &mut rng).unwrap();
            total += r.reward;
            steps += 1;
            if r.done {
                assert_eq!(r.done_reason, Some(DoneReason::Timeout));
                break;
            }
        }
        assert_eq!(steps, env.timeout());
        assert!((total - (-1.0)).abs() < 1e-9);
    }

    #[test]
    fn observations_stay_in_unit_interval() {
        let mut env = GridEnv::new(6, GridMode::Sub2Plus, 0.3);
        let mut rng = stream_rng(22, STREAM_LOOP, 0);
        env.reset();
        for i in 0..200 {
            let r = env.step(i % 4, &mut rng).unwrap();
            assert!(r.observation.iter().all(|&v| (0.0..=1.0).contains(&v)));
            if r.done {
                env.reset();
            }
        }
    }

    #[test]
    fn step_after_done_is_rejected() {
        let (mut env, mut rng) = det(2, GridMode::Sub0);
        env.step(UP, &mut rng).unwrap();
        let r = env.step(RIGHT, &mut rng).unwrap();
        assert!(r.done);
        assert!(matches!(env.step(UP, &mut rng), Err(Error::EpisodeDone)));
    }
}
