use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::normal_cdf;

/// Minimum sample size for [`ks_statistic`].
pub const KS_MIN_SAMPLES: usize = 8;
const KOLMOGOROV_TERMS: i32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// `sup_x |F_m(x) − Φ(x)|`.
    pub d: f64,
    /// Asymptotic Kolmogorov p-value at `√m·D`.
    pub p_value: f64,
}

/// `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2j²λ²}`, clamped to `[0, 1]`.
///
/// Below `λ = 1` the alternating series converges too slowly, so the
/// equivalent form `1 − (√(2π)/λ) Σ_{j≥1} e^{−(2j−1)²π²/(8λ²)}` is summed instead.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.0 {
        let c = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let sum: f64 = (1..=KOLMOGOROV_TERMS)
            .map(|j| (-f64::from(2 * j - 1).powi(2) * c).exp())
            .sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for j in 1..=KOLMOGOROV_TERMS {
        let jf = f64::from(j);
        let term = (-2.0 * jf * jf * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// One-sample Kolmogorov-Smirnov test against the standard normal.
pub fn ks_statistic(samples: &[f64]) -> Result<KsResult> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "KS needs at least {KS_MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("KS sample contains NaN".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = normal_cdf(x);
        d = d.max((i + 1) as f64 / m - f).max(f - i as f64 / m);
    }
    Ok(KsResult {
        d,
        p_value: kolmogorov_survival(m.sqrt() * d),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    /// Sample standard deviation of `x^p` over `√m`.
    pub stderr: f64,
}

/// Mean of `x^p` and its standard error.
pub fn moment_estimate(samples: &[f64], p: u32) -> Result<MomentEstimate> {
    if samples.len() < 2 {
        return Err(Error::Domain("moment estimate needs at least 2 samples".into()));
    }
    let m = samples.len() as f64;
    let pow = |x: f64| x.powi(p as i32);
    let mean = samples.iter().map(|&x| pow(x)).sum::<f64>() / m;
    let var = samples.iter().map(|&x| (pow(x) - mean).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(MomentEstimate {
        mean,
        stderr: (var / m).sqrt(),
    })
}

/// Sample variance (about the sample mean) and an approximate standard error
/// `sd((x−x̄)²)/√m`.
pub fn variance_estimate(samples: &[f64]) -> Result<MomentEstimate> {
    if samples.len() < 2 {
        return Err(Error::Domain("variance estimate needs at least 2 samples".into()));
    }
    let m = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let sq: Vec<f64> = samples.iter().map(|x| (x - mean).powi(2)).collect();
    let var = sq.iter().sum::<f64>() / (m - 1.0);
    let spread = moment_estimate(&sq, 1)?.stderr;
    Ok(MomentEstimate {
        mean: var,
        stderr: spread,
    })
}
