//! The sequential (Chinese restaurant) construction, tracking only size-class counts.

mod index;
pub mod kchain;
mod simulate;

pub(crate) use simulate::validate_checkpoints;
pub use simulate::MAX_STEPS;
mod state;

pub use index::SizeClassIndex;
pub use kchain::KChain;
pub use simulate::{simulate, simulate_with};
pub use state::{trajectory_rng, PartitionState, StepKind, StepOutcome, TransitionProbs};
