//! Kolmogorov-Smirnov and moment estimators, and the experiment runner.

mod batch;
mod ks;
mod runner;

pub use batch::{estimate_alpha, simulate_many, AlphaEstimate};
pub use ks::{
    kolmogorov_survival, ks_statistic, moment_estimate, variance_estimate, KsResult, MomentEstimate, KS_MIN_SAMPLES,
};
pub use runner::{
    map_trajectories, run_experiment, run_experiment_with_workers, version_string, workers_from_env, ExperimentConfig,
    ExperimentKind, ExperimentResult, ExperimentRow, KS_KN_TOLERANCE, KS_KRN_TOLERANCE, LIL_BAND, LIL_MIN_FRACTION,
    PLUGIN_REL_TOLERANCE, SHAT_REL_TOLERANCE, WORKERS_ENV, Z_TOLERANCE,
};
