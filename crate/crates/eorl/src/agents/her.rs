//! Hindsight goal relabeling: a small buffer of the best terminal states
//! seen so far, and recomputation of returns against a substitute goal.

use rand::Rng as _;

use crate::agents::Trajectory;
use crate::replay::Transition;
use crate::rng::Rng;

/// Keeps the terminal states of the highest-return episodes seen so far.
#[derive(Debug)]
pub struct GoalBuffer {
    capacity: usize,
    entries: Vec<(Vec<f64>, f64)>,
}

impl GoalBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Insert a terminal state; once full, a strictly better return evicts
    /// the current minimum.
    pub fn insert(&mut self, terminal_state: Vec<f64>, episode_return: f64) {
        if self.entries.len() < self.capacity {
            self.entries.push((terminal_state, episode_return));
            return;
        }
        let (worst, _) = self
            .entries
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).expect("returns are finite"))
            .expect("buffer is non-empty");
        if episode_return > self.entries[worst].1 {
            self.entries[worst] = (terminal_state, episode_return);
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Option<&[f64]> {
        if self.entries.is_empty() {
            return None;
        }
        let i = rng.random_range(0..self.entries.len());
        Some(&self.entries[i].0)
    }

    pub fn returns(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, r)| *r).collect()
    }
}

/// Relabeled copy of transition `t` under a substitute goal: if the
/// trajectory reaches the goal observation at some later step, the return is
/// the step penalties up to that point plus the goal bonus; otherwise it is
/// the remaining penalties with no bonus. The stored state is the
/// observation concatenated with the goal.
pub fn relabel_transition(
    trajectory: &Trajectory,
    t: usize,
    goal: &[f64],
    step_penalty: f64,
) -> Transition {
    let total = trajectory.steps.len();
    let post_obs = |i: usize| -> &[f64] {
        if i + 1 < total {
            &trajectory.steps[i + 1].obs
        } else {
            &trajectory.final_obs
        }
    };
    let hit = (t..total).find(|&i| post_obs(i) == goal);
    let mc_return = match hit {
        Some(i) => 10.0 - step_penalty * (i - t + 1) as f64,
        None => -step_penalty * (total - t) as f64,
    };
    let mut state = trajectory.steps[t].obs.clone();
    state.extend_from_slice(goal);
    Transition {
        state,
        action: trajectory.steps[t].action,
        mc_return,
    }
}
