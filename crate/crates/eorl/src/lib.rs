//! Population-based Q-learning with sparse evolutionary operators.
//!
//! A population of independently initialised Q-networks trains from one
//! shared Monte-Carlo replay buffer; a single policy interacts with the
//! environment each episode, and occasional crossover/mutation operators
//! replace the weakest member. The crate also ships the single-policy
//! baselines (vanilla, count-bonus, hindsight relabeling, prioritized
//! replay, cross-entropy resampling), two benchmark environments, and a
//! multi-seed experiment harness with CSV outputs.
//!
//! Per-policy training inside an episode and whole runs across seeds are
//! data-parallel; the `parallel` feature (default) runs them on rayon,
//! and disabling it falls back to identical sequential execution.

pub mod agents;
pub mod config;
pub mod envs;
pub mod error;
pub mod evolution;
pub mod harness;
pub mod nn;
pub mod replay;
pub mod rng;

pub use error::{Error, Result};
