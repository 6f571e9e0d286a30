//! The outer coordination loop: one policy runs each episode, everything
//! trains from the shared buffer, and algorithm-specific hooks (count
//! bonuses, goal relabeling, prioritized sampling, operator calls or
//! population resampling) plug into fixed points of the loop.

use crate::agents::{
    cbe_augment, cemrl, relabel_transition, run_episode, EpsilonSchedule, GoalBuffer, Trajectory,
    VisitCounts,
};
use crate::config::{AlgoId, ExperimentConfig};
use crate::envs::Env;
use crate::error::Result;
use crate::evolution::{
    maybe_evolve, select_policy, update_fitness, update_reset_point, EvoConfig, Population,
};
use crate::nn::{init_network, MlpSpec, QNetwork};
use crate::replay::{finalize_episode, ReplayBuffer, Transition};
use crate::rng::{run_seed, stream_rng, train_rng, Rng, STREAM_INIT, STREAM_LOOP};

/// One line of the per-episode training log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub seed: u64,
    pub episode: usize,
    pub policy_index: usize,
    pub episode_return: f64,
    pub epsilon: f64,
    pub evo_event: Option<&'static str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub seed: u64,
    pub rows: Vec<LogRow>,
}

impl RunLog {
    pub fn returns(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.episode_return).collect()
    }
}

/// How one policy trains at the end of an episode.
#[derive(Debug, Clone, Copy)]
pub struct TrainSettings {
    /// Samples drawn from the buffer per epoch.
    pub batch_size: usize,
    /// SGD step granularity: the epoch's sample is consumed in chunks of
    /// this size, one step each.
    pub minibatch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl TrainSettings {
    fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            batch_size: cfg.batch_size,
            minibatch_size: cfg.minibatch_size,
            epochs: cfg.epochs,
            learning_rate: cfg.learning_rate,
        }
    }
}

/// Train one policy: per epoch, draw `batch_size` samples with replacement
/// and take one SGD step per mini-batch chunk.
fn train_one(
    net: &mut QNetwork,
    buffer: &ReplayBuffer,
    mut rng: Rng,
    settings: TrainSettings,
) -> Result<()> {
    let mut scratch = net.new_scratch();
    for _ in 0..settings.epochs {
        let batch = buffer.sample_uniform(settings.batch_size, &mut rng)?;
        for chunk in batch.chunks(settings.minibatch_size) {
            net.train_batch_with(chunk, settings.learning_rate, &mut scratch)?;
        }
    }
    Ok(())
}

/// Sequential reference path: train every unmasked policy in index order.
/// Each policy draws from its own (episode, index)-keyed stream, so the
/// result is identical to the parallel path.
pub fn train_population_sequential(
    nets: &mut [QNetwork],
    mask: &[bool],
    buffer: &ReplayBuffer,
    run_seed: u64,
    episode: usize,
    settings: TrainSettings,
) -> Result<()> {
    for (i, net) in nets.iter_mut().enumerate() {
        if mask[i] {
            train_one(net, buffer, train_rng(run_seed, episode, i), settings)?;
        }
    }
    Ok(())
}

/// Data-parallel path over policies; bit-identical to the sequential path.
#[cfg(feature = "parallel")]
pub fn train_population_parallel(
    nets: &mut [QNetwork],
    mask: &[bool],
    buffer: &ReplayBuffer,
    run_seed: u64,
    episode: usize,
    settings: TrainSettings,
) -> Result<()> {
    use rayon::prelude::*;
    nets.par_iter_mut().enumerate().try_for_each(|(i, net)| {
        if !mask[i] {
            return Ok(());
        }
        train_one(net, buffer, train_rng(run_seed, episode, i), settings)
    })
}

pub fn train_population(
    nets: &mut [QNetwork],
    mask: &[bool],
    buffer: &ReplayBuffer,
    run_seed: u64,
    episode: usize,
    settings: TrainSettings,
) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        train_population_parallel(nets, mask, buffer, run_seed, episode, settings)
    }
    #[cfg(not(feature = "parallel"))]
    {
        train_population_sequential(nets, mask, buffer, run_seed, episode, settings)
    }
}

/// Prioritized training for the single-policy baseline: weighted mini-batch
/// updates, with slot priorities refreshed from the pre-step residuals after
/// each epoch's sample is consumed.
fn train_prioritized(
    net: &mut QNetwork,
    buffer: &mut ReplayBuffer,
    run_seed: u64,
    episode: usize,
    cfg: &ExperimentConfig,
) -> Result<()> {
    let (beta0, beta1) = cfg.per_beta;
    let frac = if cfg.episodes > 1 {
        (episode - 1) as f64 / (cfg.episodes - 1) as f64
    } else {
        1.0
    };
    let beta = beta0 + (beta1 - beta0) * frac;
    let mut rng = train_rng(run_seed, episode, 0);
    let mut scratch = net.new_scratch();
    for _ in 0..cfg.epochs {
        let (indices, residuals) = {
            let (batch, weights, indices) =
                buffer.sample_prioritized(cfg.batch_size, cfg.per_alpha, beta, &mut rng)?;
            let mut residuals = Vec::with_capacity(batch.len());
            for (chunk, wchunk) in batch
                .chunks(cfg.minibatch_size)
                .zip(weights.chunks(cfg.minibatch_size))
            {
                net.train_batch_weighted_with(chunk, wchunk, cfg.learning_rate, &mut scratch)?;
                residuals.extend_from_slice(scratch.residuals());
            }
            (indices, residuals)
        };
        buffer.update_priorities(&indices, &residuals);
    }
    Ok(())
}

/// Store an episode's transitions, applying the algorithm's reward hook.
/// Reported returns are never touched; only stored training targets are.
#[allow(clippy::too_many_arguments)]
fn store_transitions(
    buffer: &mut ReplayBuffer,
    trajectory: &Trajectory,
    episode_return: f64,
    counts: Option<&mut VisitCounts>,
    goals: Option<&mut GoalBuffer>,
    true_goal: &[f64],
    step_penalty: f64,
    loop_rng: &mut Rng,
) {
    if let Some(counts) = counts {
        let augmented: Vec<(Vec<f64>, usize, f64)> = trajectory
            .steps
            .iter()
            .map(|s| {
                let r = cbe_augment(s.reward, &s.obs, s.action, counts);
                (s.obs.clone(), s.action, r)
            })
            .collect();
        buffer.push(finalize_episode(&augmented));
    } else if let Some(goals) = goals {
        // Goal-conditioned copies against the true goal, plus one relabeled
        // copy per transition against a sampled past terminal state.
        let conditioned: Vec<(Vec<f64>, usize, f64)> = trajectory
            .steps
            .iter()
            .map(|s| {
                let mut state = s.obs.clone();
                state.extend_from_slice(true_goal);
                (state, s.action, s.reward)
            })
            .collect();
        buffer.push(finalize_episode(&conditioned));
        let relabeled: Vec<Transition> = (0..trajectory.steps.len())
            .map(|t| {
                let sampled = goals.sample(loop_rng).map(<[f64]>::to_vec);
                let goal = sampled.as_deref().unwrap_or(true_goal);
                relabel_transition(trajectory, t, goal, step_penalty)
            })
            .collect();
        buffer.push(relabeled);
        goals.insert(trajectory.final_obs.clone(), episode_return);
    } else {
        let plain: Vec<(Vec<f64>, usize, f64)> = trajectory
            .steps
            .iter()
            .map(|s| (s.obs.clone(), s.action, s.reward))
            .collect();
        buffer.push(finalize_episode(&plain));
    }
}

/// Run one seeded training run and return its per-episode log.
pub fn run_training(cfg: &ExperimentConfig, seed_index: u64) -> Result<RunLog> {
    cfg.validate()?;
    let rseed = run_seed(cfg.master_seed, seed_index);
    let mut env: Env = cfg.env.build();
    let n = cfg.effective_n();
    let (scheme, kappa, mu) = cfg.algo.rates();
    let mut evo = EvoConfig::new(n, kappa, mu, scheme);
    evo.sigma = cfg.sigma;
    evo.q = cfg.q;

    let her = cfg.algo == AlgoId::Her;
    let input_size = if her { 2 * env.obs_len() } else { env.obs_len() };
    let net_spec = MlpSpec::new(input_size, vec![32, 8], env.n_actions())?;
    let nets = (0..n)
        .map(|i| init_network(&net_spec, &mut stream_rng(rseed, STREAM_INIT, i as u64)))
        .collect();
    let mut population = Population::new(nets);
    let mut buffer = ReplayBuffer::new(cfg.buffer_factor * env.timeout());
    let mut loop_rng = stream_rng(rseed, STREAM_LOOP, 0);
    let schedule = EpsilonSchedule::new(cfg.decay);

    let mut counts = (cfg.algo == AlgoId::Cbe).then(VisitCounts::new);
    let mut goals = her.then(|| GoalBuffer::new(8));
    let true_goal = env.goal_observation();
    let step_penalty = env.step_penalty();
    let round_robin = cfg.algo == AlgoId::CemRl;
    let prioritized = cfg.algo == AlgoId::Per;
    let mut rl_pool = vec![true; n];
    let mut rows = Vec::with_capacity(cfg.episodes);

    for episode in 1..=cfg.episodes {
        let epsilon = schedule.epsilon(episode - 1);
        env.reset();
        let k = if round_robin {
            (episode - 1) % n
        } else {
            select_policy(&mut population, epsilon, &mut loop_rng)
        };
        let (trajectory, episode_return) = run_episode(
            &population.nets[k],
            &mut env,
            epsilon,
            her.then_some(true_goal.as_slice()),
            &mut loop_rng,
        )
        .map_err(|e| e.in_episode(episode))?;

        store_transitions(
            &mut buffer,
            &trajectory,
            episode_return,
            counts.as_mut(),
            goals.as_mut(),
            &true_goal,
            step_penalty,
            &mut loop_rng,
        );

        let mut evo_event: Option<&'static str> = None;
        if round_robin {
            population.fitness[k] = update_fitness(population.fitness[k], episode_return, cfg.q);
            if cemrl::maybe_replace(
                &mut population,
                k,
                episode_return,
                &mut rl_pool,
                &mut loop_rng,
            ) {
                evo_event = Some("cem_replace");
            }
            train_population(
                &mut population.nets,
                &rl_pool,
                &buffer,
                rseed,
                episode,
                TrainSettings::of(cfg),
            )
            .map_err(|e| e.in_episode(episode))?;
        } else if prioritized {
            train_prioritized(&mut population.nets[0], &mut buffer, rseed, episode, cfg)
                .map_err(|e| e.in_episode(episode))?;
            population.fitness[k] = update_fitness(population.fitness[k], episode_return, cfg.q);
            update_reset_point(&mut population, episode, episode_return);
        } else {
            train_population(
                &mut population.nets,
                &rl_pool,
                &buffer,
                rseed,
                episode,
                TrainSettings::of(cfg),
            )
            .map_err(|e| e.in_episode(episode))?;
            population.fitness[k] = update_fitness(population.fitness[k], episode_return, cfg.q);
            update_reset_point(&mut population, episode, episode_return);
            if let Some(event) = maybe_evolve(
                &mut population,
                &evo,
                episode,
                cfg.episodes,
                epsilon,
                &mut loop_rng,
            ) {
                evo_event = Some(event.kind.as_str());
            }
        }

        rows.push(LogRow {
            seed: seed_index,
            episode,
            policy_index: k,
            episode_return,
            epsilon,
            evo_event,
        });
    }

    Ok(RunLog {
        seed: seed_index,
        rows,
    })
}
