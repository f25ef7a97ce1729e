//! One-step conditional quantities of the martingales at a given state.

use crate::error::{Error, Result};
use crate::exact::{b_seq, size_class_beta, BSeqKind};
use crate::params::ModelParams;
use crate::partition::PartitionState;

fn require_started(state: &PartitionState) -> Result<()> {
    if state.n() == 0 {
        Err(Error::Domain("martingale quantities need n ≥ 1".into()))
    } else {
        Ok(())
    }
}

/// `b_n`.
fn b_n(params: &ModelParams, n: u64) -> Result<f64> {
    Ok(b_seq(BSeqKind::Block, params, n)?.to_f64())
}

/// `M_n = b_n (K_n + θ/α)`.
pub fn m_value(state: &PartitionState, params: &ModelParams) -> Result<f64> {
    params.require_positive_alpha()?;
    require_started(state)?;
    Ok(b_n(params, state.n())? * (state.k() as f64 + params.theta() / params.alpha()))
}

/// `p_n = (αK_n+θ)/(n+θ)`.
pub fn p_n(state: &PartitionState, params: &ModelParams) -> f64 {
    (params.alpha() * state.k() as f64 + params.theta()) / (state.n() as f64 + params.theta())
}

/// `(p_{r,n}, q_{r,n})`: probabilities that `K_{r,n}` goes up / down by one.
///
/// `p_{1,n} = (αK_n+θ)/(n+θ)`, `p_{r,n} = (r−1−α)K_{r−1,n}/(n+θ)` for `r ≥ 2`,
/// `q_{r,n} = (r−α)K_{r,n}/(n+θ)`.
pub fn p_q(state: &PartitionState, params: &ModelParams, r: u64) -> (f64, f64) {
    let (a, t) = (params.alpha(), params.theta());
    let denom = state.n() as f64 + t;
    let p = if r == 1 {
        (a * state.k() as f64 + t) / denom
    } else {
        (r as f64 - 1.0 - a) * state.count(r - 1) as f64 / denom
    };
    let q = (r as f64 - a) * state.count(r) as f64 / denom;
    (p, q)
}

/// `E[M_{n+1} | F_n] − M_n` by enumerating the outcomes, relative to `b_n(K_n + |θ/α|)`.
pub fn martingale_identity_check(state: &PartitionState, params: &ModelParams) -> Result<f64> {
    params.require_positive_alpha()?;
    require_started(state)?;
    let tp = state.transition_probs();
    let (n, k) = (state.n(), state.k() as f64);
    let shift = params.theta() / params.alpha();
    let b_next = b_n(params, n + 1)?;
    let p_join: f64 = tp.p_join.iter().map(|(_, p)| p).sum();
    let expected = tp.p_new * b_next * (k + 1.0 + shift) + p_join * b_next * (k + shift);
    let m = m_value(state, params)?;
    let scale = b_n(params, n)? * (k + shift.abs());
    Ok((expected - m) / scale)
}

/// Residual of the `K_{r,n}` martingale, computed in units of `b_{r,n}`:
/// with `Ã = A_{r,n}/b_{r,n}` and `ρ = b_{r,n+1}/b_{r,n}`,
/// `Σ_outcomes P · ρ(K_r + η) − (Ã + ρ p_{r,n}) − (K_r − Ã)`, divided by `max(1, K_r)`.
///
/// The accumulator value cancels; `a_tilde` is only there to exercise the
/// bookkeeping with a realistic magnitude.
pub fn martingale_identity_check_r(state: &PartitionState, params: &ModelParams, r: u64, a_tilde: f64) -> Result<f64> {
    require_started(state)?;
    let n = state.n();
    let kr = state.count(r) as f64;
    let tp = state.transition_probs();
    let rho = 1.0 / size_class_beta(params, r, n);
    // the three moves of K_r: +1 (a block of size r−1, or a new block when r = 1), −1, 0
    let mut up = 0.0;
    let mut down = 0.0;
    let mut stay = 0.0;
    if r == 1 {
        up += tp.p_new;
    } else {
        stay += tp.p_new;
    }
    for &(s, p) in &tp.p_join {
        if s + 1 == r {
            up += p;
        } else if s == r {
            down += p;
        } else {
            stay += p;
        }
    }
    let (p, _) = p_q(state, params, r);
    let expected = up * rho * (kr + 1.0) + down * rho * (kr - 1.0) + stay * rho * kr - (a_tilde + rho * p);
    Ok((expected - (kr - a_tilde)) / kr.max(1.0))
}

/// `E[(ΔM_{n+1})² | F_n] = b_{n+1}² (θ+αK_n)(n−αK_n)/(n+θ)²`.
pub fn qv_increment_kn(state: &PartitionState, params: &ModelParams) -> Result<f64> {
    params.require_positive_alpha()?;
    require_started(state)?;
    let (a, t) = (params.alpha(), params.theta());
    let (n, k) = (state.n() as f64, state.k() as f64);
    let b = b_n(params, state.n() + 1)?;
    Ok(b * b * (t + a * k) * (n - a * k) / ((n + t) * (n + t)))
}

/// Coefficients `e_n(0..=4)` of `E[(ΔM_{n+1})⁴|F_n] = b_{n+1}⁴ Σ_p e_n(p) K_n^p`.
pub fn fourth_coefficients(params: &ModelParams, n: u64) -> [f64; 5] {
    let (a, t) = (params.alpha(), params.theta());
    let n = n as f64;
    let d4 = (n + t).powi(4);
    [
        n * t * (n * n - n * t + t * t) / d4,
        a * (n - t) * (n * n - 4.0 * n * t + t * t) / d4,
        -2.0 * a * a * (2.0 * n - t) * (n - 2.0 * t) / d4,
        6.0 * a.powi(3) * (n - t) / d4,
        -3.0 * a.powi(4) / d4,
    ]
}

/// `E[(ΔM_{n+1})⁴ | F_n]` from the polynomial in `K_n`.
pub fn fourth_increment_kn(state: &PartitionState, params: &ModelParams) -> Result<f64> {
    params.require_positive_alpha()?;
    require_started(state)?;
    let e = fourth_coefficients(params, state.n());
    let k = state.k() as f64;
    let poly = e.iter().rev().fold(0.0, |acc, c| acc * k + c);
    Ok(b_n(params, state.n() + 1)?.powi(4) * poly)
}

/// `E[(ΔM_{n+1})^j | F_n]` by summing over `ξ ∈ {0,1}`.
pub fn brute_moment_increment_kn(state: &PartitionState, params: &ModelParams, j: i32) -> Result<f64> {
    params.require_positive_alpha()?;
    require_started(state)?;
    let p = p_n(state, params);
    let b = b_n(params, state.n() + 1)?;
    Ok(p * (b * (1.0 - p)).powi(j) + (1.0 - p) * (-b * p).powi(j))
}

/// `b_{r,n+1}`.
fn b_r_next(params: &ModelParams, r: u64, n: u64) -> Result<f64> {
    Ok(b_seq(BSeqKind::SizeR(r), params, n + 1)?.to_f64())
}

/// `E[(ΔM_{r,n+1})² | F_n] = b_{r,n+1}² (p+q−(p−q)²)`.
pub fn qv_increment_krn(state: &PartitionState, params: &ModelParams, r: u64) -> Result<f64> {
    require_started(state)?;
    let (p, q) = p_q(state, params, r);
    Ok(b_r_next(params, r, state.n())?.powi(2) * (p + q - (p - q).powi(2)))
}

/// `E[(ΔM_{r,n+1})⁴ | F_n] = b_{r,n+1}⁴ [(p+q) − 4(p−q)² + 6(p+q)(p−q)² − 3(p−q)⁴]`.
pub fn fourth_increment_krn(state: &PartitionState, params: &ModelParams, r: u64) -> Result<f64> {
    require_started(state)?;
    let (p, q) = p_q(state, params, r);
    let (s, d2) = (p + q, (p - q).powi(2));
    Ok(b_r_next(params, r, state.n())?.powi(4) * (s - 4.0 * d2 + 6.0 * s * d2 - 3.0 * d2 * d2))
}

/// `E[(ΔM_{r,n+1})^j | F_n]` by summing over `η ∈ {−1, 0, +1}`.
pub fn brute_moment_increment_krn(state: &PartitionState, params: &ModelParams, r: u64, j: i32) -> Result<f64> {
    require_started(state)?;
    let (p, q) = p_q(state, params, r);
    let b = b_r_next(params, r, state.n())?;
    let mu = p - q;
    let total: f64 = [(1.0, p), (-1.0, q), (0.0, 1.0 - p - q)]
        .iter()
        .map(|&(eta, w)| w * (b * (eta - mu)).powi(j))
        .sum();
    Ok(total)
}
