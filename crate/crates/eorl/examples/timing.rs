use eorl::agents::run_training;
use eorl::config::{AlgoId, EnvSpec, ExperimentConfig, Subgoals};

fn probe(label: &str, cfg: &ExperimentConfig, seed: u64) {
    let start = std::time::Instant::now();
    let log = run_training(cfg, seed).unwrap();
    let r = log.returns();
    let sat: f64 = r[r.len() - 100..].iter().sum::<f64>() / 100.0;
    println!("{label} seed{seed}: {:.2?} saturation={sat:.3}", start.elapsed());
}

fn main() {
    let cfg = ExperimentConfig::new(EnvSpec::bitflip(6, false), AlgoId::EorlFix, 400, 0.99);
    probe("eorl-fix 1d m=6 ", &cfg, 0);
    let cfg = ExperimentConfig::new(EnvSpec::bitflip(6, false), AlgoId::Eorl0505, 400, 0.99);
    probe("eorl-0505 1d m=6", &cfg, 0);
    let cfg = ExperimentConfig::new(EnvSpec::grid(8, Subgoals::Zero, 0.0), AlgoId::Eorl0505, 1000, 0.995);
    probe("eorl-0505 2d 8x8", &cfg, 0);
    let cfg = ExperimentConfig::new(EnvSpec::grid(12, Subgoals::Zero, 0.0), AlgoId::EorlFix, 1000, 0.995);
    probe("eorl-fix 2d 12x12", &cfg, 0);
}
