//! Episode execution and the training loops for every algorithm variant.

mod cbe;
mod cemrl;
mod her;
mod train;

pub use cbe::{cbe_augment, VisitCounts};
pub use cemrl::{gaussian_replacement, is_bottom_half};
pub use her::{relabel_transition, GoalBuffer};
pub use train::{
    run_training, train_population, train_population_sequential, LogRow, RunLog, TrainSettings,
};
#[cfg(feature = "parallel")]
pub use train::train_population_parallel;

use rand::Rng as _;

use crate::envs::Env;
use crate::error::Result;
use crate::nn::QNetwork;
use crate::rng::Rng;

/// Exponentially decaying exploration rate, starting at 1.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonSchedule {
    pub decay_per_episode: f64,
}

impl EpsilonSchedule {
    pub fn new(decay_per_episode: f64) -> Self {
        Self { decay_per_episode }
    }

    /// Epsilon after `episodes_done` completed episodes.
    pub fn epsilon(&self, episodes_done: usize) -> f64 {
        self.decay_per_episode.powi(episodes_done as i32)
    }
}

/// Epsilon-greedy action: exploit the argmax (lowest index on exact ties)
/// with probability `1 - epsilon`, otherwise explore uniformly.
pub fn epsilon_greedy_action(
    net: &QNetwork,
    state: &[f64],
    epsilon: f64,
    rng: &mut Rng,
) -> Result<usize> {
    let n_actions = net.spec().output_size;
    let u: f64 = rng.random();
    if u < epsilon {
        return Ok(rng.random_range(0..n_actions));
    }
    let q = net.forward(state)?;
    let mut best = 0;
    for i in 1..q.len() {
        if q[i] > q[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    /// Environment observation before the action.
    pub obs: Vec<f64>,
    pub action: usize,
    /// Step reward with any terminal bonus folded in.
    pub reward: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    /// Observation after the final step.
    pub final_obs: Vec<f64>,
}

/// Run one episode from the environment's current (reset) state. When `goal`
/// is given the policy input is the observation concatenated with it.
/// Returns the trajectory and the episode's true return.
pub fn run_episode(
    net: &QNetwork,
    env: &mut Env,
    epsilon: f64,
    goal: Option<&[f64]>,
    rng: &mut Rng,
) -> Result<(Trajectory, f64)> {
    let mut steps = Vec::new();
    let mut obs = env.observation();
    let mut episode_return = 0.0;
    loop {
        let action = match goal {
            Some(g) => {
                let mut input = obs.clone();
                input.extend_from_slice(g);
                epsilon_greedy_action(net, &input, epsilon, rng)?
            }
            None => epsilon_greedy_action(net, &obs, epsilon, rng)?,
        };
        let result = env.step(action, rng)?;
        episode_return += result.reward;
        steps.push(TrajectoryStep {
            obs,
            action,
            reward: result.reward,
        });
        obs = result.observation;
        if result.done {
            break;
        }
    }
    Ok((
        Trajectory {
            steps,
            final_obs: obs,
        },
        episode_return,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::GridMode;
    use crate::nn::{MlpSpec, QNetwork};
    use crate::rng::{stream_rng, STREAM_LOOP};

    fn net_with_q(q: &[f64]) -> QNetwork {
        // Input-independent Q-values via zero weights and biases = q.
        let spec = MlpSpec::new(2, vec![], q.len()).unwrap();
        let mut params = vec![0.0; spec.param_count()];
        let off = 2 * q.len();
        params[off..].copy_from_slice(q);
        QNetwork::from_params(&spec, &params).unwrap()
    }

    #[test]
    fn epsilon_schedule_decays_from_one() {
        let s = EpsilonSchedule::new(0.99);
        assert_eq!(s.epsilon(0), 1.0);
        assert!((s.epsilon(2) - 0.9801).abs() < 1e-12);
        let mut prev = 1.0;
        for e in 1..400 {
            let eps = s.epsilon(e);
            assert!(eps <= prev && eps > 0.0);
            prev = eps;
        }
    }

    #[test]
    fn greedy_action_is_argmax() {
        let net = net_with_q(&[1.0, 3.0, 2.0]);
        let mut rng = stream_rng(1, STREAM_LOOP, 0);
        for _ in 0..10 {
            assert_eq!(epsilon_greedy_action(&net, &[0.0, 0.0], 0.0, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn greedy_tie_breaks_to_lowest_index() {
        let net = net_with_q(&[5.0, 5.0, 0.0]);
        let mut rng = stream_rng(2, STREAM_LOOP, 0);
        assert_eq!(epsilon_greedy_action(&net, &[0.0, 0.0], 0.0, &mut rng).unwrap(), 0);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let net = net_with_q(&[9.0, 0.0, 0.0, 0.0]);
        let mut rng = stream_rng(3, STREAM_LOOP, 0);
        let draws = 100_000;
        let mut counts = [0u64; 4];
        for _ in 0..draws {
            counts[epsilon_greedy_action(&net, &[0.0, 0.0], 1.0, &mut rng).unwrap()] += 1;
        }
        for &c in &counts {
            let f = c as f64 / draws as f64;
            assert!((f - 0.25).abs() < 0.01, "action frequency {f}");
        }
    }

    #[test]
    fn optimal_grid_policy_earns_ten_minus_path_penalties() {
        // Hand-set linear Q on a 4x4 Sub0 grid: RIGHT until the wall (its
        // value sinks with x), then UP. The greedy walk is a 6-step optimal
        // path, so the return is 10 minus six step penalties.
        let spec = MlpSpec::new(4, vec![], 4).unwrap();
        let mut params = vec![0.0; spec.param_count()];
        // Layout: weights row-major (4 actions x 4 inputs), then biases.
        params[crate::envs::grid_actions::RIGHT * 4] = -2.0; // weight on x/m
        let off = 16;
        params[off + crate::envs::grid_actions::UP] = -0.7;
        params[off + crate::envs::grid_actions::DOWN] = -10.0;
        params[off + crate::envs::grid_actions::LEFT] = -10.0;
        params[off + crate::envs::grid_actions::RIGHT] = 1.0;
        let net = QNetwork::from_params(&spec, &params).unwrap();

        let mut env = Env::grid(4, GridMode::Sub0, 0.0);
        env.reset();
        let mut rng = stream_rng(4, STREAM_LOOP, 0);
        let (traj, ep_return) = run_episode(&net, &mut env, 0.0, None, &mut rng).unwrap();
        assert_eq!(traj.steps.len(), 6);
        let timeout = 60.0;
        assert!((ep_return - (10.0 - 6.0 / timeout)).abs() < 1e-12);
    }

    #[test]
    fn timeout_episode_return_is_minus_one() {
        // Pressing LEFT at the origin forever burns the whole timeout.
        let spec = MlpSpec::new(4, vec![], 4).unwrap();
        let mut params = vec![0.0; spec.param_count()];
        params[16 + crate::envs::grid_actions::LEFT] = 1.0;
        let net = QNetwork::from_params(&spec, &params).unwrap();
        let mut env = Env::grid(4, GridMode::Sub0, 0.0);
        env.reset();
        let mut rng = stream_rng(5, STREAM_LOOP, 0);
        let (traj, ep_return) = run_episode(&net, &mut env, 0.0, None, &mut rng).unwrap();
        assert_eq!(traj.steps.len(), 60);
        assert!((ep_return - (-1.0)).abs() < 1e-9);
    }

    #[test]
    fn episodes_are_deterministic_given_seed() {
        let spec = MlpSpec::new(6, vec![32, 8], 6).unwrap();
        let net = crate::nn::init_network(&spec, &mut stream_rng(6, 1, 0));
        let run = || {
            let mut env = Env::bitflip(6, false);
            env.reset();
            let mut rng = stream_rng(6, STREAM_LOOP, 1);
            let (traj, ret) = run_episode(&net, &mut env, 0.5, None, &mut rng).unwrap();
            (traj.steps.len(), ret)
        };
        assert_eq!(run(), run());
    }
}
