//! Exact combinatorics, streaming simulation and martingale diagnostics for
//! the two-parameter Ewens-Pitman random partition model.
//!
//! The crate is organised bottom-up:
//!
//! * [`exact`] closed-form laws and moments of `K_n` and `K_{r,n}`, together
//!   with independent brute-force oracles (forward recursion, partition
//!   enumeration, exact-rational generalized factorial coefficients).
//! * [`partition`] the sequential (Chinese restaurant) sampler, keeping only
//!   size-class counts and a prefix-sum index for `O(log n)` steps.
//! * [`martingale`] the martingales `M_n`, `M_{r,n}` evaluated online along a
//!   trajectory, plus fluctuation and iterated-logarithm statistics.
//! * [`stats`] Kolmogorov-Smirnov and moment estimators and the deterministic
//!   parallel experiment runner.
//! * [`io`] CSV / JSON serialisation of tables, trajectories and results.

pub mod error;
pub mod exact;
pub mod io;
pub mod martingale;
pub mod params;
pub mod partition;
pub mod signed;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use params::ModelParams;
pub use signed::SignedLogValue;
