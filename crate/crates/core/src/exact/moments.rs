//! Closed-form moments of `K_n`, `K_{r,n}` and the limit `S_{α,θ}`.

use serde::{Deserialize, Serialize};

use super::bseq::ln_rising_ratio;
use super::factorial::{rising_factorial, stirling2};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::signed::{SignedLogValue, SignedSum};
use crate::special::{ln_binomial, ln_factorial, ln_gamma, ln_gamma_diff};

/// Alternating sums losing more decimal digits than this are flagged.
pub const CANCELLATION_DIGITS: f64 = 10.0;

/// A closed-form value together with its cancellation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentValue {
    pub value: f64,
    /// Decimal digits cancelled inside the alternating sum.
    pub digits_lost: f64,
    /// More than [`CANCELLATION_DIGITS`] lost, or the result underflowed to 0.
    pub flagged: bool,
}

impl MomentValue {
    fn exact(value: f64) -> Self {
        Self {
            value,
            digits_lost: 0.0,
            flagged: false,
        }
    }

    fn from_sum(prefactor: SignedLogValue, sum: &SignedSum) -> Result<Self> {
        let digits_lost = sum.digits_lost();
        if sum.underflowed() {
            return Ok(Self {
                value: 0.0,
                digits_lost,
                flagged: true,
            });
        }
        let v = prefactor * sum.total();
        if v.sign() < 0 {
            if digits_lost > CANCELLATION_DIGITS {
                return Ok(Self {
                    value: 0.0,
                    digits_lost,
                    flagged: true,
                });
            }
            return Err(Error::Numerical(format!(
                "factorial moment came out negative ({}) with only {digits_lost:.1} digits cancelled",
                v.to_f64()
            )));
        }
        Ok(Self {
            value: v.to_f64(),
            digits_lost,
            flagged: digits_lost > CANCELLATION_DIGITS,
        })
    }
}

/// `(c+θ)^{(n)} / (θ)^{(n)}` for `θ ≠ 0`, `θ > −1`, `c+θ` not a non-positive integer.
///
/// Written as `((c+θ)/θ) · (1+c+θ)^{(n−1)}/(1+θ)^{(n−1)}` so the large
/// products only appear as a ratio.
fn rising_over_theta_rising(c: f64, theta: f64, n: u64) -> SignedLogValue {
    debug_assert!(theta != 0.0 && n >= 1);
    let head = SignedLogValue::from_f64((c + theta) / theta);
    head * SignedLogValue::from_ln(ln_rising_ratio(1.0 + c + theta, 1.0 + theta, n - 1))
}

/// `(c)^{(n)} / (n−1)!` for `c > 0`.
fn rising_over_factorial(c: f64, n: u64) -> SignedLogValue {
    SignedLogValue::from_ln(c.ln() + ln_rising_ratio(1.0 + c, 1.0, n - 1))
}

fn check_n(n: u64) -> Result<()> {
    if n < 1 {
        Err(Error::Domain("n must be ≥ 1".into()))
    } else {
        Ok(())
    }
}

/// `E[K_n]`.
///
/// `θ ≠ 0`: `(θ/α)((α+θ)^{(n)} − (θ)^{(n)})/(θ)^{(n)}`;
/// `θ = 0`: `(α)^{(n)}/(α (n−1)!)`.
pub fn mean_kn_exact(params: &ModelParams, n: u64) -> Result<f64> {
    params.require_positive_alpha()?;
    check_n(n)?;
    let (a, t) = (params.alpha(), params.theta());
    if params.theta_is_zero() {
        let v = rising_over_factorial(a, n) / SignedLogValue::from_f64(a);
        return Ok(v.to_f64());
    }
    let mut sum = SignedSum::new();
    sum.push(rising_over_theta_rising(a, t, n));
    sum.push(-SignedLogValue::ONE);
    let v = SignedLogValue::from_f64(t / a) * sum.total();
    if v.sign() <= 0 {
        return Err(Error::Numerical(format!(
            "E[K_n] evaluated non-positive at {params}, n={n}"
        )));
    }
    Ok(v.to_f64())
}

/// `E[(K_n)_{(p)}]` from the alternating-sum closed forms.
pub fn falling_moment_kn(params: &ModelParams, n: u64, p: u64) -> Result<MomentValue> {
    params.require_positive_alpha()?;
    check_n(n)?;
    if p == 0 {
        return Ok(MomentValue::exact(1.0));
    }
    if p == 1 {
        return mean_kn_exact(params, n).map(MomentValue::exact);
    }
    if p > n {
        // K_n ≤ n
        return Ok(MomentValue::exact(0.0));
    }
    let (a, t) = (params.alpha(), params.theta());
    let mut sum = SignedSum::new();
    if params.theta_is_zero() {
        // ((p−1)!/(α(n−1)!)) Σ_{k=1}^{p} (−1)^{p−k} C(p,k) (kα)^{(n)}
        for k in 1..=p {
            let sign = if (p - k).is_multiple_of(2) { 1 } else { -1 };
            let term = SignedLogValue::new(sign, ln_binomial(p, k)) * rising_over_factorial(k as f64 * a, n);
            sum.push(term);
        }
        let pre = SignedLogValue::from_ln(ln_factorial(p - 1) - a.ln());
        MomentValue::from_sum(pre, &sum)
    } else {
        // ((θ/α)^{(p)}/(θ)^{(n)}) Σ_{k=0}^{p} (−1)^{p−k} C(p,k) (kα+θ)^{(n)}
        for k in 0..=p {
            let sign = if (p - k).is_multiple_of(2) { 1 } else { -1 };
            let ratio = if k == 0 {
                SignedLogValue::ONE
            } else {
                rising_over_theta_rising(k as f64 * a, t, n)
            };
            sum.push(SignedLogValue::new(sign, ln_binomial(p, k)) * ratio);
        }
        let pre = rising_factorial(t / a, p);
        MomentValue::from_sum(pre, &sum)
    }
}

/// `E[K_n^p] = Σ_k {p k} E[(K_n)_{(k)}]`.
pub fn raw_moment_kn(params: &ModelParams, n: u64, p: u64) -> Result<f64> {
    if p == 1 {
        return mean_kn_exact(params, n);
    }
    let mut total = 0.0;
    for k in 0..=p {
        let s = stirling2(p, k)?;
        if s != 0 {
            total += s as f64 * falling_moment_kn(params, n, k)?.value;
        }
    }
    Ok(total)
}

/// `E[(K_{r,n})_{(p)}] = p_α(r)^p · n!/(n−rp)! · (θ/α)^{(p)} (θ+αp)^{(n−rp)} / (θ)^{(n)}`,
/// with the `θ = 0` limit `(θ/α)^{(p)}/(θ)^{(n)} → (p−1)!/(α (n−1)!)`.
pub fn falling_moment_krn(params: &ModelParams, n: u64, r: u64, p: u64) -> Result<f64> {
    params.require_positive_alpha()?;
    check_n(n)?;
    if r < 1 {
        return Err(Error::Domain("size class r must be ≥ 1".into()));
    }
    if p == 0 {
        return Ok(1.0);
    }
    let rp = r.checked_mul(p).ok_or_else(|| Error::Domain("r·p overflows".into()))?;
    if rp > n {
        return Ok(0.0);
    }
    let (a, t) = (params.alpha(), params.theta());
    let m = n - rp;
    let pf = SignedLogValue::from_f64(params.block_frequency(r)).powi(p as i32);
    // n!/(n−rp)! = (m+1)^{(rp)}
    let arrangements = rising_factorial(m as f64 + 1.0, rp);
    let v = if params.theta_is_zero() {
        // (αp)^{(m)}/(n−1)! = (αp)^{(m)} / ((1)^{(m)} (m+1)^{(rp−1)})
        let growth = SignedLogValue::from_ln(ln_rising_ratio(a * p as f64, 1.0, m));
        let tail = rising_factorial(m as f64 + 1.0, rp - 1);
        let pre = SignedLogValue::from_ln(ln_factorial(p - 1) - a.ln());
        pf * arrangements * pre * growth / tail
    } else {
        // (θ)^{(n)} = θ · (θ+1)^{(m)} · (θ+1+m)^{(rp−1)}
        let growth = SignedLogValue::from_ln(ln_rising_ratio(t + a * p as f64, t + 1.0, m));
        let denom = SignedLogValue::from_f64(t) * rising_factorial(t + 1.0 + m as f64, rp - 1);
        pf * arrangements * rising_factorial(t / a, p) * growth / denom
    };
    if v.sign() < 0 {
        return Err(Error::Numerical(format!(
            "E[(K_rn)_p] negative at {params}, n={n}, r={r}, p={p}"
        )));
    }
    Ok(v.to_f64())
}

/// `E[K_{r,n}^p] = Σ_k {p k} E[(K_{r,n})_{(k)}]`.
pub fn raw_moment_krn(params: &ModelParams, n: u64, r: u64, p: u64) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..=p {
        let s = stirling2(p, k)?;
        if s != 0 {
            total += s as f64 * falling_moment_krn(params, n, r, k)?;
        }
    }
    Ok(total)
}

/// `E[S_{α,θ}^p]`: `Γ(θ+1)(θ/α)^{(p)}/(θΓ(αp+θ))`, or `(p−1)!/(αΓ(αp))` at `θ = 0`.
pub fn limit_moment_s(params: &ModelParams, p: u64) -> Result<f64> {
    params.require_positive_alpha()?;
    if p < 1 {
        return Err(Error::Domain("moment order p must be ≥ 1".into()));
    }
    let (a, t) = (params.alpha(), params.theta());
    let ap = a * p as f64;
    let v = if params.theta_is_zero() {
        SignedLogValue::from_ln(ln_factorial(p - 1) - a.ln() - ln_gamma(ap))
    } else {
        SignedLogValue::from_ln(ln_gamma(t + 1.0) - ln_gamma(ap + t)) * rising_factorial(t / a, p)
            / SignedLogValue::from_f64(t)
    };
    if v.sign() <= 0 {
        return Err(Error::Numerical(format!("E[S^{p}] non-positive at {params}")));
    }
    Ok(v.to_f64())
}

/// `E[K_n S_{α,θ}] = Γ(θ+n)/Γ(n+α+θ) · ((θ/α)E[K_n] + E[K_n²])`.
pub fn cross_moment_kn_s(params: &ModelParams, n: u64) -> Result<f64> {
    params.require_positive_alpha()?;
    check_n(n)?;
    let (a, t) = (params.alpha(), params.theta());
    let scale = (-ln_gamma_diff(n as f64 + t, a)).exp();
    let inner = (t / a) * mean_kn_exact(params, n)? + raw_moment_kn(params, n, 2)?;
    Ok(scale * inner)
}

/// `E[K_{r,n} S_{α,θ}] = Γ(θ+1)/Γ(n+α+θ) · p_α(r) (n)_{(r)} ((α+θ)/α²) (θ+2α)^{(n−r)}`.
pub fn cross_moment_krn_s(params: &ModelParams, n: u64, r: u64) -> Result<f64> {
    params.require_positive_alpha()?;
    check_n(n)?;
    if r < 1 {
        return Err(Error::Domain("size class r must be ≥ 1".into()));
    }
    if r > n {
        return Ok(0.0);
    }
    let (a, t) = (params.alpha(), params.theta());
    // Γ(θ+1)(θ+2α)^{(n−r)}/Γ(n+α+θ) = [Γ(θ+1)/Γ(θ+2α)] · Γ(n−r+θ+2α)/Γ(n+α+θ)
    let ln_gammas = ln_gamma(t + 1.0) - ln_gamma(t + 2.0 * a) + ln_gamma_diff(n as f64 + a + t, a - r as f64);
    let falling = rising_factorial((n - r) as f64 + 1.0, r).log_magnitude();
    let ln_v = ln_gammas + falling + params.block_frequency(r).ln() + ((a + t) / (a * a)).ln();
    Ok(ln_v.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(a: f64, t: f64) -> ModelParams {
        ModelParams::new(a, t).unwrap()
    }

    fn close(got: f64, want: f64, tol: f64) -> bool {
        if want == 0.0 {
            got.abs() <= tol
        } else {
            ((got - want) / want).abs() <= tol
        }
    }

    #[test]
    fn mean_examples() {
        for q in ModelParams::grid() {
            assert!(close(mean_kn_exact(&q, 1).unwrap(), 1.0, 1e-14));
        }
        assert!(close(mean_kn_exact(&p(0.5, 0.0), 3).unwrap(), 1.875, 1e-14));
        assert!(close(mean_kn_exact(&p(0.5, 0.5), 2).unwrap(), 5.0 / 3.0, 1e-14));
        assert!(mean_kn_exact(&p(0.0, 1.0), 3).is_err());
    }

    #[test]
    fn falling_examples() {
        assert!(close(falling_moment_kn(&p(0.5, 0.0), 3, 2).unwrap().value, 2.25, 1e-13));
        assert_eq!(falling_moment_kn(&p(0.5, 0.5), 1, 2).unwrap().value, 0.0);
        assert!(close(
            falling_moment_kn(&p(0.5, 0.5), 2, 1).unwrap().value,
            5.0 / 3.0,
            1e-14
        ));
    }

    #[test]
    fn raw_examples() {
        assert!(close(raw_moment_kn(&p(0.5, 0.0), 3, 2).unwrap(), 4.125, 1e-13));
        for q in ModelParams::grid() {
            for pp in 1..5 {
                assert!(close(raw_moment_kn(&q, 1, pp).unwrap(), 1.0, 1e-13));
            }
        }
        assert!(close(raw_moment_kn(&p(0.5, 0.0), 2, 1).unwrap(), 1.5, 1e-14));
    }

    #[test]
    fn raw_first_moment_is_the_mean() {
        for q in ModelParams::grid() {
            for n in [1, 2, 10, 1000, 123_456] {
                assert_eq!(raw_moment_kn(&q, n, 1).unwrap(), mean_kn_exact(&q, n).unwrap());
            }
        }
    }

    #[test]
    fn krn_examples() {
        let q = p(0.5, 0.5);
        assert!(close(falling_moment_krn(&q, 2, 1, 1).unwrap(), 4.0 / 3.0, 1e-14));
        assert!(close(falling_moment_krn(&q, 1, 1, 1).unwrap(), 1.0, 1e-14));
        assert_eq!(falling_moment_krn(&p(0.5, 0.0), 3, 2, 2).unwrap(), 0.0);
        assert!(close(raw_moment_krn(&q, 2, 1, 2).unwrap(), 8.0 / 3.0, 1e-14));
        assert!(close(raw_moment_krn(&q, 1, 1, 3).unwrap(), 1.0, 1e-14));
        assert!(close(raw_moment_krn(&q, 2, 2, 1).unwrap(), 1.0 / 3.0, 1e-14));
    }

    #[test]
    fn size_classes_account_for_every_element() {
        for q in ModelParams::grid() {
            for n in [1u64, 5, 17, 50] {
                let total: f64 = (1..=n)
                    .map(|r| r as f64 * falling_moment_krn(&q, n, r, 1).unwrap())
                    .sum();
                assert!(close(total, n as f64, 1e-9), "{q} n={n}: {total}");
                let blocks: f64 = (1..=n).map(|r| falling_moment_krn(&q, n, r, 1).unwrap()).sum();
                assert!(close(blocks, mean_kn_exact(&q, n).unwrap(), 1e-9));
            }
        }
    }

    #[test]
    fn limit_moment_examples() {
        assert!(close(limit_moment_s(&p(0.5, 0.0), 2).unwrap(), 2.0, 1e-14));
        assert!(close(limit_moment_s(&p(0.5, 0.0), 1).unwrap(), 2.0 / PI.sqrt(), 1e-14));
        assert!(close(limit_moment_s(&p(0.5, 0.5), 1).unwrap(), PI.sqrt(), 1e-14));
    }

    #[test]
    fn limit_branch_is_continuous_in_theta() {
        for &a in &[0.3, 0.5, 0.8] {
            for pp in 1..5 {
                let at0 = limit_moment_s(&p(a, 0.0), pp).unwrap();
                let near = limit_moment_s(&p(a, 1e-9), pp).unwrap();
                assert!(close(near, at0, 1e-7), "a={a} p={pp}");
                let near_neg = limit_moment_s(&p(a, -1e-9), pp).unwrap();
                assert!(close(near_neg, at0, 1e-7));
            }
            for n in [1u64, 3, 40] {
                for pp in 1..4 {
                    let at0 = falling_moment_kn(&p(a, 0.0), n, pp).unwrap().value;
                    let near = falling_moment_kn(&p(a, 1e-9), n, pp).unwrap().value;
                    assert!(close(near, at0, 1e-6), "a={a} n={n} p={pp}");
                    let k0 = falling_moment_krn(&p(a, 0.0), n, 1, pp).unwrap();
                    let kn = falling_moment_krn(&p(a, 1e-9), n, 1, pp).unwrap();
                    assert!(close(kn, k0, 1e-6));
                }
            }
        }
    }

    #[test]
    fn cross_moment_consistency_at_n1() {
        for q in ModelParams::grid().into_iter().chain([p(0.5, 0.5)]) {
            let s1 = limit_moment_s(&q, 1).unwrap();
            assert!(close(cross_moment_kn_s(&q, 1).unwrap(), s1, 1e-12), "{q}");
            assert!(close(cross_moment_krn_s(&q, 1, 1).unwrap(), s1, 1e-12), "{q}");
        }
        assert_eq!(cross_moment_krn_s(&p(0.5, 0.5), 2, 3).unwrap(), 0.0);
    }

    #[test]
    fn large_n_is_finite_and_scaled() {
        let q = p(0.5, 0.5);
        let n = 100_000_000u64;
        let m = mean_kn_exact(&q, n).unwrap();
        let lim = limit_moment_s(&q, 1).unwrap();
        assert!(close(m / (n as f64).sqrt(), lim, 1e-3));
    }

    #[test]
    fn cancellation_flag_trips_on_tiny_results() {
        // n = p: the alternating sum collapses to p!·P(K_p = p); at small α this
        // is tiny relative to the individual terms.
        let q = p(0.001, 0.0);
        let v = falling_moment_kn(&q, 12, 12).unwrap();
        assert!(v.digits_lost > 3.0);
    }
}
