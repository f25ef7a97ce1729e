//! The exact law of `K_n`.

use serde::{Deserialize, Serialize};

use super::factorial::rising_factorial;
use super::gfc::gfc_log_row;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::special::ln_factorial;

/// Largest `n` for the quadratic-cost exact law.
pub const EXACT_DIST_MAX_N: u64 = 10_000;

/// `P(K_n = k)` for `k = 1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    pub n: u64,
    /// Entry `k − 1` holds `P(K_n = k)`.
    pub probabilities: Vec<f64>,
}

impl ExactDistribution {
    /// `P(K_n = k)`, zero outside `1..=n`.
    pub fn prob(&self, k: u64) -> f64 {
        if k == 0 || k > self.n {
            0.0
        } else {
            self.probabilities[(k - 1) as usize]
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// `E[K_n^p]`.
    pub fn moment(&self, p: u32) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, q)| q * ((i + 1) as f64).powi(p as i32))
            .sum()
    }

    /// `P(K_n ≤ k)`.
    pub fn cdf(&self, k: u64) -> f64 {
        self.probabilities.iter().take(k.min(self.n) as usize).sum()
    }

    pub fn max_abs_diff(&self, other: &ExactDistribution) -> f64 {
        let n = self.n.max(other.n);
        (1..=n)
            .map(|k| (self.prob(k) - other.prob(k)).abs())
            .fold(0.0, f64::max)
    }
}

fn check_n(n: u64) -> Result<()> {
    if n < 1 {
        return Err(Error::Domain("n must be ≥ 1".into()));
    }
    if n > EXACT_DIST_MAX_N {
        return Err(Error::Domain(format!(
            "exact law limited to n ≤ {EXACT_DIST_MAX_N}, got {n}"
        )));
    }
    Ok(())
}

/// `P(K_n = k) = (θ/α)^{(k)} C(n,k;α) / (θ)^{(n)}`, and at `θ = 0` the limit
/// `(k−1)! C(n,k;α) / (α (n−1)!)`.
pub fn exact_dist_kn(params: &ModelParams, n: u64) -> Result<ExactDistribution> {
    params.require_positive_alpha()?;
    check_n(n)?;
    let row = gfc_log_row(n, params)?;
    let (a, t) = (params.alpha(), params.theta());
    let mut probabilities = Vec::with_capacity(n as usize);
    if params.theta_is_zero() {
        let denom = a.ln() + ln_factorial(n - 1);
        let mut ln_fact = 0.0; // ln (k−1)!
        for k in 1..=n {
            if k > 1 {
                ln_fact += ((k - 1) as f64).ln();
            }
            probabilities.push((ln_fact + row[k as usize] - denom).exp());
        }
    } else {
        let denom = rising_factorial(t, n);
        let ratio = t / a;
        // (θ/α)^{(k)} built incrementally; its sign matches that of (θ)^{(n)}
        let mut sign = 1i8;
        let mut ln_rise = 0.0;
        for k in 1..=n {
            let f = ratio + (k - 1) as f64;
            if f < 0.0 {
                sign = -sign;
            }
            ln_rise += f.abs().ln();
            if sign != denom.sign() {
                return Err(Error::Numerical(format!(
                    "negative probability P(K_{n}={k}) at {params}"
                )));
            }
            probabilities.push((ln_rise + row[k as usize] - denom.log_magnitude()).exp());
        }
    }
    Ok(ExactDistribution { n, probabilities })
}

/// Forward recursion on the one-step transition law, seeded at `P(K_1 = 1) = 1`.
///
/// Independent of the coefficient tables and valid for `α = 0`.
pub fn dp_dist_oracle(params: &ModelParams, n: u64) -> Result<ExactDistribution> {
    check_n(n)?;
    let (a, t) = (params.alpha(), params.theta());
    let mut p = Vec::with_capacity(n as usize);
    p.push(1.0);
    for m in 1..n {
        let mf = m as f64;
        let denom = mf + t;
        p.push(0.0);
        for k in (1..=m as usize + 1).rev() {
            let stay = if k as u64 <= m {
                p[k - 1] * (mf - a * k as f64) / denom
            } else {
                0.0
            };
            let open = if k >= 2 {
                p[k - 2] * (a * (k - 1) as f64 + t) / denom
            } else {
                0.0
            };
            p[k - 1] = stay + open;
        }
    }
    Ok(ExactDistribution { n, probabilities: p })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, t: f64) -> ModelParams {
        ModelParams::new(a, t).unwrap()
    }

    fn assert_probs(d: &ExactDistribution, want: &[f64]) {
        assert_eq!(d.probabilities.len(), want.len());
        for (g, w) in d.probabilities.iter().zip(want) {
            assert!((g - w).abs() < 1e-14, "{:?} vs {want:?}", d.probabilities);
        }
    }

    #[test]
    fn small_laws() {
        assert_probs(&exact_dist_kn(&p(0.5, 0.0), 2).unwrap(), &[0.5, 0.5]);
        assert_probs(&exact_dist_kn(&p(0.5, 0.0), 3).unwrap(), &[0.375, 0.375, 0.25]);
        assert_probs(&dp_dist_oracle(&p(0.5, 0.0), 3).unwrap(), &[0.375, 0.375, 0.25]);
        assert_probs(&dp_dist_oracle(&p(0.0, 1.0), 2).unwrap(), &[0.5, 0.5]);
        for q in ModelParams::grid() {
            assert_probs(&exact_dist_kn(&q, 1).unwrap(), &[1.0]);
            assert_probs(&dp_dist_oracle(&q, 1).unwrap(), &[1.0]);
        }
    }

    #[test]
    fn closed_form_matches_recursion() {
        let mut grid = ModelParams::grid();
        grid.push(p(0.5, -0.4));
        for q in grid {
            for n in [2, 7, 50, 200] {
                let e = exact_dist_kn(&q, n).unwrap();
                let d = dp_dist_oracle(&q, n).unwrap();
                assert!((e.total_mass() - 1.0).abs() < 1e-10, "{q} n={n}");
                assert!(e.max_abs_diff(&d) < 1e-10, "{q} n={n}");
                assert!(e.probabilities.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn size_bound_enforced() {
        let q = p(0.5, 1.0);
        assert!(exact_dist_kn(&q, EXACT_DIST_MAX_N + 1).is_err());
        assert!(dp_dist_oracle(&q, 0).is_err());
        assert!(exact_dist_kn(&p(0.0, 1.0), 3).is_err());
    }
}
