use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::index::SizeClassIndex;
use crate::params::ModelParams;

/// Sizes below this also get a flat count array for `O(1)` lookup.
const FAST_SIZES: usize = 64;

/// The random stream for trajectory `index` of an experiment seeded by `seed`.
///
/// ChaCha is counter based, so each `(seed, index)` pair is an independent
/// stream regardless of which worker runs it.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    NewBlock,
    /// An element joined a block of size `r`, which now has size `r+1`.
    JoinSizeClass(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub kind: StepKind,
}

impl StepOutcome {
    /// `ξ_{n+1}`: 1 if a block was opened.
    pub fn delta_k(&self) -> u64 {
        matches!(self.kind, StepKind::NewBlock) as u64
    }

    /// Change of `K_{r,n}` caused by this step.
    pub fn delta_kr(&self, r: u64) -> i64 {
        match self.kind {
            StepKind::NewBlock => (r == 1) as i64,
            StepKind::JoinSizeClass(s) => (r == s + 1) as i64 - (r == s) as i64,
        }
    }
}

/// One-step transition law from a state with `n ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionProbs {
    pub p_new: f64,
    /// `(r, (r−α)K_r/(n+θ))` for every occupied size, sorted by `r`.
    pub p_join: Vec<(u64, f64)>,
}

impl TransitionProbs {
    pub fn total(&self) -> f64 {
        self.p_new + self.p_join.iter().map(|(_, p)| p).sum::<f64>()
    }
}

/// Sequential construction state: `n`, `K_n` and the size-class counts.
#[derive(Debug, Clone)]
pub struct PartitionState {
    params: ModelParams,
    n: u64,
    index: SizeClassIndex,
    small: [u64; FAST_SIZES],
}

impl PartitionState {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            n: 0,
            index: SizeClassIndex::new(),
            small: [0; FAST_SIZES],
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    /// `K_n`.
    #[inline]
    pub fn k(&self) -> u64 {
        self.index.total_blocks()
    }

    /// `K_{r,n}`.
    #[inline]
    pub fn count(&self, r: u64) -> u64 {
        if (r as usize) < FAST_SIZES {
            self.small[r as usize]
        } else {
            self.index.count(r)
        }
    }

    /// Occupied `(r, K_{r,n})` sorted by `r`.
    pub fn size_counts(&self) -> Vec<(u64, u64)> {
        let mut v: Vec<_> = self.index.occupied().collect();
        v.sort_unstable();
        v
    }

    /// `Σ_r (r−α)K_{r,n} = n − αK_n`.
    pub fn total_weight(&self) -> f64 {
        self.index.total_weight(self.params.alpha())
    }

    pub fn distinct_sizes(&self) -> usize {
        self.index.distinct_sizes()
    }

    /// Builds a state directly from size-class counts `(r, K_r)`.
    pub fn from_counts(params: ModelParams, counts: &[(u64, u64)]) -> Self {
        let mut s = Self::new(params);
        for &(r, c) in counts {
            for _ in 0..c {
                s.add_block(r);
            }
            s.n += r * c;
        }
        s
    }

    fn add_block(&mut self, r: u64) {
        self.index.insert(r);
        if (r as usize) < FAST_SIZES {
            self.small[r as usize] += 1;
        }
    }

    fn drop_block(&mut self, r: u64) {
        self.index.remove(r);
        if (r as usize) < FAST_SIZES {
            self.small[r as usize] -= 1;
        }
    }

    /// `p_new = (αK_n+θ)/(n+θ)`; 1 at `n = 0` (first element always opens a block).
    pub fn p_new(&self) -> f64 {
        if self.n == 0 {
            return 1.0;
        }
        let (a, t) = (self.params.alpha(), self.params.theta());
        (a * self.k() as f64 + t) / (self.n as f64 + t)
    }

    pub fn transition_probs(&self) -> TransitionProbs {
        let denom = self.n as f64 + self.params.theta();
        let a = self.params.alpha();
        let p_join = self
            .size_counts()
            .into_iter()
            .map(|(r, c)| (r, (r as f64 - a) * c as f64 / denom))
            .collect();
        TransitionProbs {
            p_new: self.p_new(),
            p_join,
        }
    }

    /// Applies a step decided by a uniform `u ∈ [0,1)`.
    ///
    /// `x = u(n+θ)` opens a block when `x < αK_n+θ`; otherwise `x − (αK_n+θ)`
    /// locates the joined size class in the weight index.
    pub fn step_with_uniform(&mut self, u: f64) -> StepOutcome {
        let kind = if self.n == 0 {
            StepKind::NewBlock
        } else {
            let (a, t) = (self.params.alpha(), self.params.theta());
            let x = u * (self.n as f64 + t);
            let open = a * self.k() as f64 + t;
            if x < open {
                StepKind::NewBlock
            } else {
                StepKind::JoinSizeClass(self.index.find(x - open, a))
            }
        };
        self.apply(kind);
        StepOutcome { kind }
    }

    /// Samples and applies one step.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        let u: f64 = rng.random();
        self.step_with_uniform(u)
    }

    /// Applies an outcome without sampling.
    pub fn apply(&mut self, kind: StepKind) {
        match kind {
            StepKind::NewBlock => self.add_block(1),
            StepKind::JoinSizeClass(r) => {
                self.drop_block(r);
                self.add_block(r + 1);
            }
        }
        self.n += 1;
        #[cfg(debug_assertions)]
        self.debug_check();
    }

    #[cfg(debug_assertions)]
    fn debug_check(&self) {
        debug_assert_eq!(self.index.total_elements(), self.n);
        debug_assert!(self.count(1) <= self.k() && self.k() <= self.n);
    }

    /// `Σ r·K_r = n`, `Σ K_r = K_n`, `K_1 ≤ K_n ≤ n`, recomputed from the counts.
    pub fn check_invariants(&self) -> Result<(), String> {
        let counts = self.size_counts();
        let elems: u64 = counts.iter().map(|(r, c)| r * c).sum();
        let blocks: u64 = counts.iter().map(|(_, c)| c).sum();
        if elems != self.n {
            return Err(format!("Σ r·K_r = {elems} but n = {}", self.n));
        }
        if blocks != self.k() {
            return Err(format!("Σ K_r = {blocks} but K = {}", self.k()));
        }
        if self.count(1) > self.k() || self.k() > self.n {
            return Err("K_1 ≤ K_n ≤ n violated".into());
        }
        for r in 1..FAST_SIZES as u64 {
            if self.small[r as usize] != self.index.count(r) {
                return Err(format!("fast count for r={r} out of sync"));
            }
        }
        Ok(())
    }
}
