//! Event-driven sampler of the block-count chain `K_n` alone.
//!
//! From `(n, K)` with `c = αK+θ`, no block is opened during the next `m`
//! steps with probability
//!
//! `S(m) = Π_{j<m} (n+j−αK)/(n+j+θ) = [(n−αK)^{(m)}] / [(n+θ)^{(m)}]`,
//!
//! so the waiting time to the next new block is drawn by inverting `S` with
//! one uniform. The law of the path `n ↦ K_n` is the same as that of
//! [`PartitionState`](super::PartitionState); only the size classes are
//! forgotten.

use rand::Rng;

use crate::exact::bseq::ln_rising_ratio;
use crate::params::ModelParams;

/// Below this `n` single Bernoulli steps are cheaper than a jump.
const BERNOULLI_BELOW: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KChain {
    params: ModelParams,
    n: u64,
    k: u64,
}

impl KChain {
    pub fn new(params: ModelParams) -> Self {
        Self { params, n: 0, k: 0 }
    }

    /// Continues a chain from an existing `(n, K_n)`.
    pub fn from_state(params: ModelParams, n: u64, k: u64) -> Self {
        assert!(k <= n && (n == 0) == (k == 0), "invalid (n={n}, K={k})");
        Self { params, n, k }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// `ln S(m)`.
    fn ln_survival(&self, m: u64) -> f64 {
        let (a, t) = (self.params.alpha(), self.params.theta());
        let n = self.n as f64;
        ln_rising_ratio(n - a * self.k as f64, n + t, m)
    }

    /// Largest `m ≤ limit` with `ln S(m) > ln_u`, given `ln S(0) = 0 > ln_u`.
    fn invert(&self, ln_u: f64, limit: u64) -> u64 {
        if self.ln_survival(limit) > ln_u {
            return limit;
        }
        // continuous guess from S(m) ≈ (n/(n+m))^c, then bracket around it
        let c = self.params.alpha() * self.k as f64 + self.params.theta();
        let n = self.n as f64;
        let guess = (n * ((-ln_u / c).exp_m1())).clamp(0.0, limit as f64) as u64;
        let (mut lo, mut hi) = (0u64, limit);
        let mut width = (guess / 64).max(1);
        let mut probe = guess;
        if self.ln_survival(probe) > ln_u {
            lo = probe;
            loop {
                probe = probe.saturating_add(width).min(hi);
                if probe == hi || self.ln_survival(probe) <= ln_u {
                    hi = probe;
                    break;
                }
                lo = probe;
                width *= 2;
            }
        } else {
            hi = probe;
            loop {
                probe = probe.saturating_sub(width).max(lo);
                if probe == lo || self.ln_survival(probe) > ln_u {
                    lo = probe;
                    break;
                }
                hi = probe;
                width *= 2;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.ln_survival(mid) > ln_u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Runs the chain until `n = target` (no-op if already there).
    pub fn advance_to<R: Rng + ?Sized>(&mut self, target: u64, rng: &mut R) {
        let (a, t) = (self.params.alpha(), self.params.theta());
        while self.n < target {
            if self.n == 0 {
                self.n = 1;
                self.k = 1;
                continue;
            }
            if self.n < BERNOULLI_BELOW {
                let u: f64 = rng.random();
                if u * (self.n as f64 + t) < a * self.k as f64 + t {
                    self.k += 1;
                }
                self.n += 1;
                continue;
            }
            let u: f64 = rng.random();
            if u == 0.0 {
                self.k += 1;
                self.n += 1;
                continue;
            }
            let rem = target - self.n;
            let wait = self.invert(u.ln(), rem);
            if wait == rem {
                // no block before the target; by the Markov property the
                // chain restarts from (target, K) with fresh randomness
                self.n = target;
            } else {
                self.n += wait + 1;
                self.k += 1;
            }
        }
    }

    /// `K_n` at each checkpoint (must be nondecreasing and ≥ the current `n`).
    pub fn run<R: Rng + ?Sized>(&mut self, checkpoints: &[u64], rng: &mut R) -> Vec<u64> {
        checkpoints
            .iter()
            .map(|&c| {
                self.advance_to(c, rng);
                self.k
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::trajectory_rng;

    #[test]
    fn inversion_brackets_the_uniform() {
        let q = ModelParams::new(0.5, 0.5).unwrap();
        let ch = KChain::from_state(q, 10_000, 150);
        for &u in &[0.999_999, 0.9, 0.5, 0.1, 1e-6] {
            let ln_u = f64::ln(u);
            let m = ch.invert(ln_u, 1 << 40);
            assert!(ch.ln_survival(m) > ln_u);
            assert!(ch.ln_survival(m + 1) <= ln_u);
        }
    }

    #[test]
    fn survival_is_the_product() {
        let q = ModelParams::new(0.3, -0.1).unwrap();
        let ch = KChain::from_state(q, 500, 40);
        let direct: f64 = (0..37)
            .map(|j| ((500.0 + j as f64 - 0.3 * 40.0) / (500.0 + j as f64 - 0.1)).ln())
            .sum();
        assert!((ch.ln_survival(37) - direct).abs() < 1e-12);
    }

    #[test]
    fn checkpoints_are_monotone() {
        let q = ModelParams::new(0.8, 1.0).unwrap();
        let mut rng = trajectory_rng(1, 0);
        let ks = KChain::new(q).run(&[1, 10, 1000, 100_000, 10_000_000], &mut rng);
        assert_eq!(ks[0], 1);
        assert!(ks.windows(2).all(|w| w[0] <= w[1]));
        assert!(ks[4] > 10_000);
    }
}
