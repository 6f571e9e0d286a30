//! Training-curve data: per-episode mean and standard deviation across
//! seeds, with optional trailing-window smoothing applied per seed first.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::aggregate::mean_std;

/// Trailing moving average with window `w` (truncated at the start).
pub fn smooth_trailing(series: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "window must be >= 1");
    let mut out = Vec::with_capacity(series.len());
    let mut acc = 0.0;
    for i in 0..series.len() {
        acc += series[i];
        if i >= window {
            acc -= series[i - window];
        }
        let len = (i + 1).min(window);
        out.push(acc / len as f64);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Build the cross-seed curve from per-seed return series.
pub fn curve_from_runs(per_seed: &[Vec<f64>], window: usize) -> Result<Curve> {
    let Some(first) = per_seed.first() else {
        return Err(Error::Config("no runs to plot".into()));
    };
    let episodes = first.len();
    if per_seed.iter().any(|r| r.len() != episodes) {
        return Err(Error::Config(
            "all runs must have the same episode count".into(),
        ));
    }
    let smoothed: Vec<Vec<f64>> = per_seed
        .iter()
        .map(|r| smooth_trailing(r, window))
        .collect();
    let mut mean = Vec::with_capacity(episodes);
    let mut std = Vec::with_capacity(episodes);
    let mut column = vec![0.0; per_seed.len()];
    for e in 0..episodes {
        for (s, run) in smoothed.iter().enumerate() {
            column[s] = run[e];
        }
        let (m, sd) = mean_std(&column);
        mean.push(m);
        std.push(sd);
    }
    Ok(Curve { mean, std })
}

pub fn curve_to_csv(curve: &Curve) -> String {
    let mut out = String::from("episode,mean_return,std_return\n");
    for (i, (m, s)) in curve.mean.iter().zip(&curve.std).enumerate() {
        writeln!(out, "{},{},{}", i + 1, m, s).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_one_is_identity() {
        let series = vec![1.0, -2.0, 3.5, 0.0];
        assert_eq!(smooth_trailing(&series, 1), series);
        let curve = curve_from_runs(&[series.clone()], 1).unwrap();
        assert_eq!(curve.mean, series);
    }

    #[test]
    fn single_seed_has_zero_std() {
        let curve = curve_from_runs(&[vec![1.0, 2.0, 3.0]], 2).unwrap();
        assert!(curve.std.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn trailing_window_truncates_at_the_start() {
        let series = vec![2.0, 4.0, 6.0, 8.0];
        let sm = smooth_trailing(&series, 3);
        assert_eq!(sm, vec![2.0, 3.0, 4.0, 6.0]);
    }

    #[test]
    fn mean_curve_equals_grand_mean_by_linearity() {
        let a = vec![1.0, 3.0, 5.0, 7.0];
        let b = vec![3.0, 5.0, 7.0, 9.0];
        let curve = curve_from_runs(&[a.clone(), b.clone()], 2).unwrap();
        // Smoothing then averaging equals averaging then smoothing.
        let grand: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
        let expect = smooth_trailing(&grand, 2);
        for (g, e) in curve.mean.iter().zip(&expect) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        assert!(curve_from_runs(&[vec![1.0], vec![1.0, 2.0]], 1).is_err());
        assert!(curve_from_runs(&[], 1).is_err());
    }

    #[test]
    fn csv_is_one_row_per_episode() {
        let curve = curve_from_runs(&[vec![1.0, 2.0]], 1).unwrap();
        let text = curve_to_csv(&curve);
        assert_eq!(text, "episode,mean_return,std_return\n1,1,0\n2,2,0\n");
    }
}
