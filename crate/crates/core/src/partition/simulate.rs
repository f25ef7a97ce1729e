use rand::Rng;

use super::state::{trajectory_rng, PartitionState};
use crate::error::{Error, Result};
use crate::martingale::{MartingaleTracker, TrajectoryRecord};
use crate::params::ModelParams;

/// Longest trajectory accepted by [`simulate`].
pub const MAX_STEPS: u64 = 100_000_000;

pub(crate) fn validate_checkpoints(checkpoints: &[u64]) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(Error::Domain("at least one checkpoint is required".into()));
    }
    if checkpoints[0] < 1 {
        return Err(Error::Domain("checkpoints start at n = 1".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("checkpoints must be strictly increasing".into()));
    }
    if *checkpoints.last().unwrap() > MAX_STEPS {
        return Err(Error::Domain(format!("last checkpoint exceeds {MAX_STEPS}")));
    }
    Ok(())
}

/// Runs trajectory 0 of `seed`, recording at each checkpoint.
pub fn simulate(
    params: ModelParams,
    checkpoints: &[u64],
    seed: u64,
    tracked_r: &[u64],
) -> Result<Vec<TrajectoryRecord>> {
    simulate_with(params, checkpoints, tracked_r, &mut trajectory_rng(seed, 0))
}

/// As [`simulate`], drawing from a caller-supplied stream.
pub fn simulate_with<R: Rng + ?Sized>(
    params: ModelParams,
    checkpoints: &[u64],
    tracked_r: &[u64],
    rng: &mut R,
) -> Result<Vec<TrajectoryRecord>> {
    validate_checkpoints(checkpoints)?;
    if tracked_r.contains(&0) {
        return Err(Error::Domain("tracked size classes must be ≥ 1".into()));
    }
    let mut state = PartitionState::new(params);
    let mut tracker = MartingaleTracker::new(params, tracked_r);
    let mut out = Vec::with_capacity(checkpoints.len());
    for &c in checkpoints {
        while state.n() < c {
            tracker.step(&mut state, rng);
        }
        state.check_invariants().map_err(Error::Numerical)?;
        out.push(tracker.record(&state)?);
    }
    Ok(out)
}
