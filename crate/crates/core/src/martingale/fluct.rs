//! Fluctuation, iterated-logarithm and estimator statistics built from records.

use serde::{Deserialize, Serialize};

use super::tracker::TrajectoryRecord;
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::partition::PartitionState;

/// Horizon cap for the terminal estimate of `S_{α,θ}`.
pub const SHAT_HORIZON_CAP: u64 = 100_000_000;
/// First `n` at which the iterated-logarithm ratio is reported.
pub const LIL_START: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluctuationKind {
    CltKnSelfNorm,
    CltKnMixed,
    CltKrnSelfNorm,
    CltKrnMixed,
    LilRatio,
}

impl FluctuationKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CltKnSelfNorm => "clt_kn_self_norm",
            Self::CltKnMixed => "clt_kn_mixed",
            Self::CltKrnSelfNorm => "clt_krn_self_norm",
            Self::CltKrnMixed => "clt_krn_mixed",
            Self::LilRatio => "lil_ratio",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSample {
    pub kind: FluctuationKind,
    pub n: u64,
    /// Size class, `None` for the `K_n` statistics.
    pub r: Option<u64>,
    pub value: f64,
    /// False when the statistic is undefined (e.g. `K_{r,n} = 0` for the
    /// self-normalised form); such samples are excluded and counted.
    pub valid: bool,
}

/// The `K_{r,n}` statistic centred by `A_{r,n}/b_{r,n}`:
/// self-normalised `(K_{r,n} − Ã)/√K_{r,n}`, or mixed `(K_{r,n} − Ã)/n^{α/2}`.
pub fn clt_stat_krn(
    record: &TrajectoryRecord,
    params: &ModelParams,
    r: u64,
    self_normalized: bool,
) -> Result<FluctuationSample> {
    let c = record
        .size_class(r)
        .ok_or_else(|| Error::Domain(format!("size class {r} was not tracked")))?;
    let dev = c.k_r as f64 - c.a_tilde;
    let (kind, value, valid) = if self_normalized {
        let ok = c.k_r > 0;
        (
            FluctuationKind::CltKrnSelfNorm,
            if ok { dev / (c.k_r as f64).sqrt() } else { f64::NAN },
            ok,
        )
    } else {
        (
            FluctuationKind::CltKrnMixed,
            dev / (record.n as f64).powf(params.alpha() / 2.0),
            true,
        )
    };
    Ok(FluctuationSample {
        kind,
        n: record.n,
        r: Some(r),
        value,
        valid,
    })
}

/// The `K_n` statistic with `S_{α,θ}` replaced by `s_hat`:
/// self-normalised `(K_n − n^α Ŝ)/√K_n`, or mixed `√(n^α)(K_n/n^α − Ŝ)`.
pub fn clt_stat_kn(
    record: &TrajectoryRecord,
    s_hat: f64,
    params: &ModelParams,
    self_normalized: bool,
) -> Result<FluctuationSample> {
    if s_hat.is_nan() || s_hat <= 0.0 {
        return Err(Error::Domain(format!("Ŝ must be positive, got {s_hat}")));
    }
    let na = (record.n as f64).powf(params.alpha());
    let k = record.k as f64;
    let (kind, value) = if self_normalized {
        (FluctuationKind::CltKnSelfNorm, (k - na * s_hat) / k.sqrt())
    } else {
        (FluctuationKind::CltKnMixed, na.sqrt() * (k / na - s_hat))
    };
    Ok(FluctuationSample {
        kind,
        n: record.n,
        r: None,
        value,
        valid: value.is_finite(),
    })
}

/// `Ŝ = K_N / N^α`.
pub fn s_hat_terminal(k_at_horizon: u64, horizon: u64, params: &ModelParams) -> Result<f64> {
    if horizon < 1 {
        return Err(Error::Domain("horizon N must be ≥ 1".into()));
    }
    Ok(k_at_horizon as f64 / (horizon as f64).powf(params.alpha()))
}

/// `N = min(n·10^{⌈2/α⌉}, 10^8)`, never below `n`.
pub fn shat_horizon(n: u64, params: &ModelParams) -> Result<u64> {
    params.require_positive_alpha()?;
    let e = (2.0 / params.alpha()).ceil() as u32;
    let mult = 10u64.checked_pow(e).unwrap_or(u64::MAX);
    Ok(n.saturating_mul(mult).min(SHAT_HORIZON_CAP).max(n))
}

/// `⌈16·1.5^j⌉` for `j = 0, 1, …` up to `n_max`, deduplicated.
pub fn lil_checkpoints(n_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut x = LIL_START as f64;
    while x.ceil() as u64 <= n_max {
        let c = x.ceil() as u64;
        if out.last() != Some(&c) {
            out.push(c);
        }
        x *= 1.5;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LilPoint {
    pub n: u64,
    pub ratio: f64,
    pub running_max: f64,
}

/// Running `deviation² / (2 n^α ln ln n)` and its maximum.
///
/// For `K_n` the deviation is `K_n − n^α Ŝ` and the lim sup is `S_{α,θ}`; for
/// `K_{r,n}` it is `K_{r,n} − A_{r,n}/b_{r,n}` with lim sup `p_α(r) S_{α,θ}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LilTracker {
    alpha: f64,
    pub points: Vec<LilPoint>,
}

impl LilTracker {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            alpha: params.alpha(),
            points: Vec::new(),
        }
    }

    /// Adds the point at `n`; ignored below [`LIL_START`].
    pub fn push(&mut self, n: u64, deviation: f64) {
        if n < LIL_START {
            return;
        }
        let nf = n as f64;
        let ratio = deviation * deviation / (2.0 * nf.powf(self.alpha) * nf.ln().ln());
        let prev = self.points.last().map_or(0.0, |p| p.running_max);
        self.points.push(LilPoint {
            n,
            ratio,
            running_max: prev.max(ratio),
        });
    }

    /// Convenience for the `K_n` form.
    pub fn push_kn(&mut self, n: u64, k: u64, s_hat: f64) {
        self.push(n, k as f64 - (n as f64).powf(self.alpha) * s_hat);
    }

    pub fn running_max(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.running_max)
    }

    pub fn samples(&self) -> impl Iterator<Item = FluctuationSample> + '_ {
        self.points.iter().map(|p| FluctuationSample {
            kind: FluctuationKind::LilRatio,
            n: p.n,
            r: None,
            value: p.ratio,
            valid: true,
        })
    }
}

/// `K_{1,n}/K_n`, consistent for `α`.
pub fn alpha_estimator(state: &PartitionState) -> Result<f64> {
    alpha_estimate_from_counts(state.count(1), state.k())
}

pub fn alpha_estimate_from_counts(k1: u64, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("α estimate needs K_n > 0".into()));
    }
    Ok(k1 as f64 / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::martingale::tracker::SizeClassRecord;

    fn p(a: f64, t: f64) -> ModelParams {
        ModelParams::new(a, t).unwrap()
    }

    fn rec(n: u64, k: u64, k_r: u64, a_tilde: f64) -> TrajectoryRecord {
        TrajectoryRecord {
            n,
            k,
            log_b: 0.0,
            m: None,
            qv_predictable: 0.0,
            qv_realized: 0.0,
            size_classes: vec![SizeClassRecord {
                r: 1,
                k_r,
                log_b_r: 0.0,
                a_tilde,
                m_tilde: k_r as f64 - a_tilde,
                qv_predictable: 0.0,
                qv_realized: 0.0,
            }],
            s_hat: None,
        }
    }

    #[test]
    fn centred_statistics_vanish() {
        let q = p(0.5, 0.5);
        let r = rec(10_000, 100, 40, 40.0);
        assert_eq!(clt_stat_krn(&r, &q, 1, true).unwrap().value, 0.0);
        assert_eq!(clt_stat_krn(&r, &q, 1, false).unwrap().value, 0.0);
        assert_eq!(clt_stat_kn(&r, 1.0, &q, true).unwrap().value, 0.0);
        assert_eq!(clt_stat_kn(&r, 1.0, &q, false).unwrap().value, 0.0);
        let z = rec(10_000, 100, 0, 3.0);
        let s = clt_stat_krn(&z, &q, 1, true).unwrap();
        assert!(!s.valid);
        assert!(clt_stat_krn(&z, &q, 2, true).is_err());
        assert!(clt_stat_kn(&r, 0.0, &q, true).is_err());
    }

    #[test]
    fn s_hat_and_horizon() {
        let q = p(0.5, 0.5);
        assert_eq!(s_hat_terminal(100, 10_000, &q).unwrap(), 1.0);
        assert_eq!(shat_horizon(10_000, &q).unwrap(), 100_000_000);
        assert_eq!(shat_horizon(100, &q).unwrap(), 1_000_000);
        assert_eq!(shat_horizon(100, &p(0.8, 0.0)).unwrap(), 100_000);
        assert_eq!(shat_horizon(10, &p(0.3, 0.0)).unwrap(), 100_000_000);
        assert_eq!(shat_horizon(1 << 40, &p(0.3, 0.0)).unwrap(), 1 << 40);
    }

    #[test]
    fn lil_basics() {
        let cps = lil_checkpoints(200);
        assert_eq!(cps, vec![16, 24, 36, 54, 81, 122, 183]);
        let q = p(0.5, 0.5);
        let mut t = LilTracker::new(&q);
        t.push(8, 5.0);
        assert!(t.points.is_empty());
        t.push_kn(100, 10, 1.0);
        assert_eq!(t.points[0].ratio, 0.0);
        t.push(200, 3.0);
        t.push(300, 0.1);
        let maxes: Vec<f64> = t.points.iter().map(|p| p.running_max).collect();
        assert!(maxes.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(t.running_max(), t.points[1].ratio);
    }

    #[test]
    fn alpha_estimates() {
        assert_eq!(alpha_estimate_from_counts(3, 6).unwrap(), 0.5);
        let q = p(0.5, 0.5);
        let s = PartitionState::from_counts(q, &[(1, 1)]);
        assert_eq!(alpha_estimator(&s).unwrap(), 1.0);
        assert!(alpha_estimator(&PartitionState::new(q)).is_err());
    }
}
