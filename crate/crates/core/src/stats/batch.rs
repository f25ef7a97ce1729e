//! Independent trajectories in bulk, one stream per trajectory index.

use serde::{Deserialize, Serialize};

use super::runner::map_trajectories;
use crate::error::Result;
use crate::martingale::{alpha_estimator, TrajectoryRecord};
use crate::params::ModelParams;
use crate::partition::{simulate_with, trajectory_rng, PartitionState};

/// `trials` tracked trajectories of `seed`, flattened as `(trajectory_id, record)`.
pub fn simulate_many(
    params: ModelParams,
    checkpoints: &[u64],
    tracked_r: &[u64],
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<(u64, TrajectoryRecord)>> {
    let runs = map_trajectories(trials, workers, |i| {
        simulate_with(params, checkpoints, tracked_r, &mut trajectory_rng(seed, i))
    })?;
    Ok(runs
        .into_iter()
        .enumerate()
        .flat_map(|(i, recs)| recs.into_iter().map(move |r| (i as u64, r)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub trajectory_id: u64,
    pub n: u64,
    pub k: u64,
    pub k1: u64,
    pub alpha_hat: f64,
}

/// `K_{1,n}/K_n` on `trials` independent partitions of size `n`.
pub fn estimate_alpha(
    params: ModelParams,
    n: u64,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<AlphaEstimate>> {
    crate::partition::validate_checkpoints(&[n])?;
    map_trajectories(trials, workers, |i| {
        let mut rng = trajectory_rng(seed, i);
        let mut s = PartitionState::new(params);
        while s.n() < n {
            s.step(&mut rng);
        }
        Ok(AlphaEstimate {
            trajectory_id: i,
            n,
            k: s.k(),
            k1: s.count(1),
            alpha_hat: alpha_estimator(&s)?,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_single_runs() {
        let p = ModelParams::new(0.5, 1.0).unwrap();
        let many = simulate_many(p, &[10, 100], &[1], 3, 7, 2).unwrap();
        assert_eq!(many.len(), 6);
        let one = simulate_with(p, &[10, 100], &[1], &mut trajectory_rng(7, 2)).unwrap();
        assert_eq!(many[4].1, one[0]);
        assert_eq!(many[5].0, 2);
    }

    #[test]
    fn alpha_estimates_are_ratios() {
        let p = ModelParams::new(0.5, 1.0).unwrap();
        for e in estimate_alpha(p, 1000, 5, 1, 1).unwrap() {
            assert_eq!(e.alpha_hat, e.k1 as f64 / e.k as f64);
        }
    }
}
