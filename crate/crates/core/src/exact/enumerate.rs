//! Brute-force joint law of the size-class counts for tiny `n`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::special::ln_factorial;

/// Largest `n` the enumeration accepts.
pub const ENUMERATION_MAX_N: u64 = 8;

/// Probability of each configuration `(K_{1,n}, …, K_{n,n})`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLaw {
    pub n: u64,
    /// Key entry `r − 1` is the number of blocks of size `r`.
    pub masses: BTreeMap<Vec<u64>, f64>,
}

impl JointLaw {
    pub fn total_mass(&self) -> f64 {
        self.masses.values().sum()
    }

    /// `E[f(counts)]`.
    pub fn expect(&self, f: impl Fn(&[u64]) -> f64) -> f64 {
        self.masses.iter().map(|(c, m)| m * f(c)).sum()
    }

    /// `E[K_n^p]`.
    pub fn moment_kn(&self, p: u32) -> f64 {
        self.expect(|c| (c.iter().sum::<u64>() as f64).powi(p as i32))
    }

    /// `E[K_{r,n}^p]`.
    pub fn moment_krn(&self, r: u64, p: u32) -> f64 {
        self.expect(|c| (count(c, r) as f64).powi(p as i32))
    }

    /// Marginal law of `K_n`, entry `k − 1` holding `P(K_n = k)`.
    pub fn marginal_kn(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n as usize];
        for (c, m) in &self.masses {
            out[(c.iter().sum::<u64>() - 1) as usize] += m;
        }
        out
    }
}

fn count(c: &[u64], r: u64) -> u64 {
    c.get((r - 1) as usize).copied().unwrap_or(0)
}

/// Integer partitions of `n` as non-increasing part lists.
fn partitions(n: u64) -> Vec<Vec<u64>> {
    fn rec(rem: u64, max: u64, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=rem.min(max)).rev() {
            cur.push(part);
            rec(rem - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// Sampling-formula probability of every block-size configuration:
///
/// `Π_{i=1}^{k−1}(θ+iα) · Π_j (1−α)^{(n_j−1)} / (θ+1)^{(n−1)}` times the
/// number of set partitions with those block sizes, `n!/(Π n_j! Π_r K_r!)`.
pub fn enumerate_joint_oracle(params: &ModelParams, n: u64) -> Result<JointLaw> {
    if n < 1 {
        return Err(Error::Domain("n must be ≥ 1".into()));
    }
    if n > ENUMERATION_MAX_N {
        return Err(Error::OracleScope(format!(
            "partition enumeration limited to n ≤ {ENUMERATION_MAX_N}, got {n}"
        )));
    }
    let (a, t) = (params.alpha(), params.theta());
    let denom: f64 = (1..n).map(|i| t + i as f64).product();
    let mut masses = BTreeMap::new();
    for parts in partitions(n) {
        let k = parts.len() as u64;
        let mut counts = vec![0u64; n as usize];
        for &s in &parts {
            counts[(s - 1) as usize] += 1;
        }
        let mut w: f64 = (1..k).map(|i| t + i as f64 * a).product();
        for &s in &parts {
            w *= (1..s).map(|i| i as f64 - a).product::<f64>();
        }
        let ln_ways = ln_factorial(n)
            - parts.iter().map(|&s| ln_factorial(s)).sum::<f64>()
            - counts.iter().map(|&c| ln_factorial(c)).sum::<f64>();
        masses.insert(counts, w / denom * ln_ways.exp().round());
    }
    Ok(JointLaw { n, masses })
}
