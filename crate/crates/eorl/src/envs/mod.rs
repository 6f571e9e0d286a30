//! Benchmark environments: 1D bit-flipping and 2D grid navigation, each with
//! subgoal variants. Every step pays a constant penalty; reaching the goal
//! additionally pays a mode-dependent terminal bonus folded into the final
//! step's reward.

mod bitflip;
mod grid;

pub use bitflip::BitFlipEnv;
pub use grid::{GridEnv, GridMode};

/// Action indices of the grid environment.
pub mod grid_actions {
    pub use super::grid::{DOWN, LEFT, RIGHT, UP};
}

use crate::error::Result;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoneReason {
    Goal,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub done_reason: Option<DoneReason>,
}

impl StepResult {
    fn running(observation: Vec<f64>, reward: f64) -> Self {
        Self {
            observation,
            reward,
            done: false,
            done_reason: None,
        }
    }

    fn finished(observation: Vec<f64>, reward: f64, reason: DoneReason) -> Self {
        Self {
            observation,
            reward,
            done: true,
            done_reason: Some(reason),
        }
    }
}

/// A benchmark environment instance. One instance drives one run.
#[derive(Debug, Clone)]
pub enum Env {
    BitFlip(BitFlipEnv),
    Grid(GridEnv),
}

impl Env {
    pub fn bitflip(m: usize, subgoal: bool) -> Self {
        Env::BitFlip(BitFlipEnv::new(m, subgoal))
    }

    pub fn grid(m: usize, mode: GridMode, stochasticity: f64) -> Self {
        Env::Grid(GridEnv::new(m, mode, stochasticity))
    }

    pub fn reset(&mut self) -> Vec<f64> {
        match self {
            Env::BitFlip(e) => e.reset(),
            Env::Grid(e) => e.reset(),
        }
    }

    pub fn observation(&self) -> Vec<f64> {
        match self {
            Env::BitFlip(e) => e.observation(),
            Env::Grid(e) => e.observation(),
        }
    }

    pub fn step(&mut self, action: usize, rng: &mut Rng) -> Result<StepResult> {
        match self {
            Env::BitFlip(e) => e.step(action),
            Env::Grid(e) => e.step(action, rng),
        }
    }

    pub fn n_actions(&self) -> usize {
        match self {
            Env::BitFlip(e) => e.n_actions(),
            Env::Grid(_) => 4,
        }
    }

    pub fn obs_len(&self) -> usize {
        match self {
            Env::BitFlip(e) => e.n_actions(),
            Env::Grid(_) => 4,
        }
    }

    pub fn timeout(&self) -> usize {
        match self {
            Env::BitFlip(e) => e.timeout(),
            Env::Grid(e) => e.timeout(),
        }
    }

    /// Magnitude of the constant per-step penalty.
    pub fn step_penalty(&self) -> f64 {
        1.0 / self.timeout() as f64
    }

    /// Observation of the goal state, used as the "true goal" for
    /// goal-conditioned agents.
    pub fn goal_observation(&self) -> Vec<f64> {
        match self {
            Env::BitFlip(e) => e.goal_observation(),
            Env::Grid(e) => e.goal_observation(),
        }
    }
}
