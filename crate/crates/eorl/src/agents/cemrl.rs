//! Round-robin cross-entropy baseline: poorly performing policies are
//! sometimes resampled from a diagonal Gaussian fit to the top half of the
//! population.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::evolution::Population;
use crate::rng::Rng;

/// An episode outcome counts as bottom-half when it falls strictly below the
/// lowest top-half fitness value.
pub fn is_bottom_half(episode_return: f64, fitness: &[f64]) -> bool {
    let mut sorted = fitness.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("fitness is finite"));
    let cutoff = sorted[fitness.len().div_ceil(2) - 1];
    episode_return < cutoff
}

/// Draw replacement parameters from a per-parameter Gaussian fit to the top
/// half of the population. The replacement fitness is the top-half mean.
pub fn gaussian_replacement(population: &Population, rng: &mut Rng) -> (Vec<f64>, f64) {
    let top = population.top_half_indices();
    let params: Vec<Vec<f64>> = top
        .iter()
        .map(|&i| population.nets[i].flatten_params())
        .collect();
    let k = params.len() as f64;
    let dim = params[0].len();
    let mut child = Vec::with_capacity(dim);
    for p in 0..dim {
        let mean = params.iter().map(|v| v[p]).sum::<f64>() / k;
        let var = params.iter().map(|v| (v[p] - mean).powi(2)).sum::<f64>() / k;
        let dist = Normal::new(mean, var.sqrt()).expect("std is non-negative");
        child.push(dist.sample(rng));
    }
    let fitness = top.iter().map(|&i| population.fitness[i]).sum::<f64>() / k;
    (child, fitness)
}

/// Post-episode bookkeeping for the policy that just ran: a bottom-half
/// outcome is replaced with probability one half (leaving the gradient pool),
/// anything else re-enters the gradient pool. Returns whether a replacement
/// happened.
pub fn maybe_replace(
    population: &mut Population,
    policy: usize,
    episode_return: f64,
    rl_pool: &mut [bool],
    rng: &mut Rng,
) -> bool {
    if is_bottom_half(episode_return, &population.fitness) {
        if rng.random::<f64>() < 0.5 {
            let (params, fitness) = gaussian_replacement(population, rng);
            population.nets[policy]
                .load_params(&params)
                .expect("replacement matches the population architecture");
            population.fitness[policy] = fitness;
            rl_pool[policy] = false;
            return true;
        }
    } else {
        rl_pool[policy] = true;
    }
    false
}
