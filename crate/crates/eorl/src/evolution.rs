//! Evolutionary operators over flat parameter vectors, fitness bookkeeping,
//! policy selection, and the two operator-scheduling schemes.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::nn::QNetwork;
use crate::rng::Rng;

/// When and how strongly the operators fire, relative to the base rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Rate multiplier decays linearly to zero over training.
    UniformRandom,
    /// Linear decay until exploration bottoms out, then the multiplier grows
    /// with the number of episodes since the last reset point.
    ActiveRandom,
    /// Operators never fire (population-only ablation).
    Fixed,
}

#[derive(Debug, Clone)]
pub struct EvoConfig {
    pub n: usize,
    pub kappa: f64,
    pub mu: f64,
    pub sigma: f64,
    pub q: f64,
    pub scheme: Scheme,
}

impl EvoConfig {
    pub fn new(n: usize, kappa: f64, mu: f64, scheme: Scheme) -> Self {
        Self {
            n,
            kappa,
            mu,
            sigma: 0.25,
            q: 0.9,
            scheme,
        }
    }

    /// Population with no evolutionary operations.
    pub fn fixed(n: usize) -> Self {
        Self::new(n, 0.0, 0.0, Scheme::Fixed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    RandomCrossover,
    LinearCrossover,
    Mutation,
}

impl OperatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OperatorKind::RandomCrossover => "crossover_random",
            OperatorKind::LinearCrossover => "crossover_linear",
            OperatorKind::Mutation => "mutation",
        }
    }
}

/// Record of one operator application.
#[derive(Debug, Clone, PartialEq)]
pub struct EvoEvent {
    pub kind: OperatorKind,
    pub replaced: usize,
    pub parents: (usize, Option<usize>),
    pub tau: Option<f64>,
}

/// The trained population plus its scheduler state.
pub struct Population {
    pub nets: Vec<QNetwork>,
    pub fitness: Vec<f64>,
    /// Index of a just-spawned child that must run the next episode.
    pub fresh_child: Option<usize>,
    pub best_return: Option<f64>,
    /// Reset point e*: last episode with an operator event or near-best return.
    pub reset_episode: usize,
}

impl Population {
    pub fn new(nets: Vec<QNetwork>) -> Self {
        let n = nets.len();
        Self {
            nets,
            fitness: vec![0.0; n],
            fresh_child: None,
            best_return: None,
            reset_episode: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.nets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nets.is_empty()
    }

    /// Lowest-fitness policy, ties broken by lowest index.
    pub fn argmin_fitness(&self) -> usize {
        let mut best = 0;
        for i in 1..self.fitness.len() {
            if self.fitness[i] < self.fitness[best] {
                best = i;
            }
        }
        best
    }

    /// Indices of the top 50 percentile by fitness (ties resolved toward
    /// lower indices), in descending fitness order.
    pub fn top_half_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.fitness.len()).collect();
        idx.sort_by(|&a, &b| {
            self.fitness[b]
                .partial_cmp(&self.fitness[a])
                .expect("fitness must be finite")
                .then(a.cmp(&b))
        });
        idx.truncate(self.fitness.len().div_ceil(2));
        idx
    }
}

/// Softmax cross ratio `tau` of two fitness values, computed overflow-safe.
pub fn cross_ratio(a_i: f64, a_j: f64) -> f64 {
    let m = a_i.max(a_j);
    let ei = (a_i - m).exp();
    let ej = (a_j - m).exp();
    ei / (ei + ej)
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// Per parameter: take the value from parent i with probability `tau`, from
/// parent j otherwise, scaled by multiplicative noise `N(1, sigma)`.
pub fn random_crossover(
    theta_i: &[f64],
    theta_j: &[f64],
    a_i: f64,
    a_j: f64,
    sigma: f64,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    check_lengths(theta_i, theta_j)?;
    let tau = cross_ratio(a_i, a_j);
    let noise = Normal::new(1.0, sigma).expect("sigma must be non-negative");
    Ok(theta_i
        .iter()
        .zip(theta_j)
        .map(|(&ti, &tj)| {
            let pick: f64 = rng.random();
            let src = if pick < tau { ti } else { tj };
            src * noise.sample(rng)
        })
        .collect())
}

/// Per parameter: fitness-weighted average of the parents, scaled by
/// multiplicative noise `N(1, sigma)`.
pub fn linear_crossover(
    theta_i: &[f64],
    theta_j: &[f64],
    a_i: f64,
    a_j: f64,
    sigma: f64,
    rng: &mut Rng,
) -> Result<Vec<f64>> {
    check_lengths(theta_i, theta_j)?;
    let tau = cross_ratio(a_i, a_j);
    let noise = Normal::new(1.0, sigma).expect("sigma must be non-negative");
    Ok(theta_i
        .iter()
        .zip(theta_j)
        .map(|(&ti, &tj)| (tau * ti + (1.0 - tau) * tj) * noise.sample(rng))
        .collect())
}

/// Single-parent multiplicative noise.
pub fn mutate(theta_i: &[f64], sigma: f64, rng: &mut Rng) -> Vec<f64> {
    let noise = Normal::new(1.0, sigma).expect("sigma must be non-negative");
    theta_i.iter().map(|&t| t * noise.sample(rng)).collect()
}

/// Soft fitness update applied only to the policy that ran the episode.
pub fn update_fitness(a_i: f64, episode_return: f64, q: f64) -> f64 {
    q * a_i + (1.0 - q) * episode_return
}

/// Pick the policy for the next episode. A freshly spawned child always runs
/// once; otherwise explore uniformly with probability `epsilon`, else pick
/// uniformly among the fitness maximizers.
pub fn select_policy(population: &mut Population, epsilon: f64, rng: &mut Rng) -> usize {
    if let Some(k) = population.fresh_child.take() {
        return k;
    }
    let n = population.len();
    let u: f64 = rng.random();
    if u < epsilon {
        return rng.random_range(0..n);
    }
    let max = population
        .fitness
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..n).filter(|&i| population.fitness[i] == max).collect();
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.random_range(0..ties.len())]
    }
}

/// Rate multiplier `f` for the operator probabilities.
pub fn scheme_multiplier(
    scheme: Scheme,
    episode: usize,
    total_episodes: usize,
    reset_episode: usize,
    n: usize,
    epsilon: f64,
) -> f64 {
    let base = 1.0 - episode as f64 / total_episodes as f64;
    match scheme {
        Scheme::Fixed => 0.0,
        Scheme::UniformRandom => base,
        Scheme::ActiveRandom => {
            if epsilon > 0.05 {
                base
            } else {
                let grown = episode.saturating_sub(reset_episode) as f64 / n as f64;
                grown.clamp(base, 5.0)
            }
        }
    }
}

/// Track the best observed return and refresh the reset point on a
/// near-best episode (within 5% of the best, sign-safe).
pub fn update_reset_point(population: &mut Population, episode: usize, episode_return: f64) {
    let best = population
        .best_return
        .map_or(episode_return, |b| b.max(episode_return));
    population.best_return = Some(best);
    let threshold = best - 0.05 * best.abs();
    if episode_return >= threshold {
        population.reset_episode = episode;
    }
}

/// Possibly apply one evolutionary operator at the end of an episode. A
/// crossover fires with probability `kappa * f`, otherwise a mutation with
/// probability `mu * f`. Parents come from the top half by fitness with the
/// replacement target excluded; a crossover without two distinct candidates
/// degrades to a mutation.
pub fn maybe_evolve(
    population: &mut Population,
    config: &EvoConfig,
    episode: usize,
    total_episodes: usize,
    epsilon: f64,
    rng: &mut Rng,
) -> Option<EvoEvent> {
    let f = scheme_multiplier(
        config.scheme,
        episode,
        total_episodes,
        population.reset_episode,
        config.n,
        epsilon,
    );
    let u_cross: f64 = rng.random();
    let u_mut: f64 = rng.random();
    let want_crossover = u_cross < config.kappa * f;
    let want_mutation = !want_crossover && u_mut < config.mu * f;
    if !want_crossover && !want_mutation {
        return None;
    }

    let k = population.argmin_fitness();
    let pool: Vec<usize> = population
        .top_half_indices()
        .into_iter()
        .filter(|&i| i != k)
        .collect();
    if pool.is_empty() {
        return None;
    }

    let event = if want_crossover && pool.len() >= 2 {
        let pi = pool[rng.random_range(0..pool.len())];
        let mut pj = pool[rng.random_range(0..pool.len() - 1)];
        if pj == pi {
            pj = pool[pool.len() - 1];
        }
        let (a_i, a_j) = (population.fitness[pi], population.fitness[pj]);
        let tau = cross_ratio(a_i, a_j);
        let theta_i = population.nets[pi].flatten_params();
        let theta_j = population.nets[pj].flatten_params();
        let (kind, child) = if rng.random::<f64>() < 0.5 {
            (
                OperatorKind::RandomCrossover,
                random_crossover(&theta_i, &theta_j, a_i, a_j, config.sigma, rng)
                    .expect("parents share one architecture"),
            )
        } else {
            (
                OperatorKind::LinearCrossover,
                linear_crossover(&theta_i, &theta_j, a_i, a_j, config.sigma, rng)
                    .expect("parents share one architecture"),
            )
        };
        population.nets[k]
            .load_params(&child)
            .expect("child has the population's parameter count");
        population.fitness[k] = tau * a_i + (1.0 - tau) * a_j;
        EvoEvent {
            kind,
            replaced: k,
            parents: (pi, Some(pj)),
            tau: Some(tau),
        }
    } else {
        // Mutation, either chosen directly or as the crossover fallback when
        // only one distinct parent exists.
        let pi = pool[rng.random_range(0..pool.len())];
        let theta_i = population.nets[pi].flatten_params();
        let child = mutate(&theta_i, config.sigma, rng);
        population.nets[k]
            .load_params(&child)
            .expect("child has the population's parameter count");
        population.fitness[k] = population.fitness[pi];
        EvoEvent {
            kind: OperatorKind::Mutation,
            replaced: k,
            parents: (pi, None),
            tau: None,
        }
    };

    population.fresh_child = Some(k);
    population.reset_episode = episode;
    Some(event)
}
