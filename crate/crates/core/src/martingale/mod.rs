//! The martingales `M_n`, `M_{r,n}` along trajectories and the fluctuation
//! statistics built on them.

mod fluct;
mod increments;
mod tracker;

pub use fluct::{
    alpha_estimate_from_counts, alpha_estimator, clt_stat_kn, clt_stat_krn, lil_checkpoints, s_hat_terminal,
    shat_horizon, FluctuationKind, FluctuationSample, LilPoint, LilTracker, LIL_START, SHAT_HORIZON_CAP,
};
pub use increments::{
    brute_moment_increment_kn, brute_moment_increment_krn, fourth_coefficients, fourth_increment_kn,
    fourth_increment_krn, m_value, martingale_identity_check, martingale_identity_check_r, p_n, p_q, qv_increment_kn,
    qv_increment_krn,
};
pub use tracker::{AAccumulator, MartingaleTracker, SizeClassRecord, TrajectoryRecord};
