//! Deterministic laws and moments, plus brute-force oracles used to check them.

pub mod bseq;
pub mod distribution;
pub mod enumerate;
pub mod factorial;
pub mod gfc;
pub mod moments;

pub use bseq::{b_seq, size_class_beta, BSeqKind};
pub use distribution::{dp_dist_oracle, exact_dist_kn, ExactDistribution, EXACT_DIST_MAX_N};
pub use enumerate::{enumerate_joint_oracle, JointLaw, ENUMERATION_MAX_N};
pub use factorial::{falling_factorial, rising_factorial, stirling2};
pub use gfc::{gfc_log_row, gfc_oracle, gfc_oracle_check, gfc_table, GfcTable, ORACLE_MAX_N};
pub use moments::{
    cross_moment_kn_s, cross_moment_krn_s, falling_moment_kn, falling_moment_krn, limit_moment_s, mean_kn_exact,
    raw_moment_kn, raw_moment_krn, MomentValue, CANCELLATION_DIGITS,
};
