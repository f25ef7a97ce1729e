//! Browser bindings: exact law of K_n, a simulated path, and a CLT histogram.
//!
//! The `*_impl` functions are plain Rust so they can be tested natively; the
//! exported wrappers only convert errors.

use ep_core::exact::exact_dist_kn;
use ep_core::martingale::clt_stat_krn;
use ep_core::partition::{simulate_with, trajectory_rng, KChain};
use ep_core::{ModelParams, Result};
use wasm_bindgen::prelude::*;

/// Largest `n` the page may request for the exact law.
pub const MAX_EXACT_N: u64 = 2000;
/// Cap on `trials × n` for the histogram so the page stays responsive.
pub const MAX_HISTOGRAM_WORK: u64 = 50_000_000;

fn params(alpha: f64, theta: f64) -> Result<ModelParams> {
    ModelParams::new(alpha, theta)
}

fn to_js(e: ep_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// `P(K_n = k)` for `k = 1..n`.
pub fn exact_distribution_impl(alpha: f64, theta: f64, n: u32) -> Result<Vec<f64>> {
    let n = u64::from(n);
    if n > MAX_EXACT_N {
        return Err(ep_core::Error::Domain(format!("demo limits n to {MAX_EXACT_N}")));
    }
    let d = exact_dist_kn(&params(alpha, theta)?, n)?;
    Ok(d.probabilities)
}

/// `[n_0, K_0, n_1, K_1, …]` at `points` roughly log-spaced times up to `n`.
pub fn simulate_path_impl(alpha: f64, theta: f64, n: u32, points: u32, seed: u32) -> Result<Vec<f64>> {
    let p = params(alpha, theta)?;
    let n = u64::from(n.max(1));
    let points = points.clamp(2, 2000) as f64;
    let mut checkpoints: Vec<u64> = (0..points as u64)
        .map(|i| (n as f64).powf(i as f64 / (points - 1.0)).round() as u64)
        .collect();
    checkpoints.dedup();
    let mut chain = KChain::new(p);
    let mut rng = trajectory_rng(u64::from(seed), 0);
    let mut out = Vec::with_capacity(2 * checkpoints.len());
    for c in checkpoints {
        chain.advance_to(c, &mut rng);
        out.extend([c as f64, chain.k() as f64]);
    }
    Ok(out)
}

/// Counts of the self-normalised `K_{r,n}` statistic in `bins` equal cells
/// over `[-4, 4]`; the last two entries are the number of samples outside
/// the range and the number excluded because `K_{r,n} = 0`.
pub fn clt_histogram_impl(
    alpha: f64,
    theta: f64,
    r: u32,
    n: u32,
    trials: u32,
    seed: u32,
    bins: u32,
) -> Result<Vec<f64>> {
    let p = params(alpha, theta)?;
    let (r, n) = (u64::from(r.max(1)), u64::from(n.max(1)));
    if u64::from(trials) * n > MAX_HISTOGRAM_WORK {
        return Err(ep_core::Error::Domain(format!(
            "demo limits trials × n to {MAX_HISTOGRAM_WORK}"
        )));
    }
    let bins = bins.clamp(1, 200) as usize;
    let mut counts = vec![0.0; bins + 2];
    for i in 0..u64::from(trials) {
        let rec = simulate_with(p, &[n], &[r], &mut trajectory_rng(u64::from(seed), i))?;
        let s = clt_stat_krn(&rec[0], &p, r, true)?;
        if !s.valid {
            counts[bins + 1] += 1.0;
        } else if (-4.0..4.0).contains(&s.value) {
            counts[((s.value + 4.0) / 8.0 * bins as f64) as usize] += 1.0;
        } else {
            counts[bins] += 1.0;
        }
    }
    Ok(counts)
}

#[wasm_bindgen]
pub fn exact_distribution(alpha: f64, theta: f64, n: u32) -> std::result::Result<Vec<f64>, JsError> {
    exact_distribution_impl(alpha, theta, n).map_err(to_js)
}

#[wasm_bindgen]
pub fn simulate_path(alpha: f64, theta: f64, n: u32, points: u32, seed: u32) -> std::result::Result<Vec<f64>, JsError> {
    simulate_path_impl(alpha, theta, n, points, seed).map_err(to_js)
}

#[wasm_bindgen]
pub fn clt_histogram(
    alpha: f64,
    theta: f64,
    r: u32,
    n: u32,
    trials: u32,
    seed: u32,
    bins: u32,
) -> std::result::Result<Vec<f64>, JsError> {
    clt_histogram_impl(alpha, theta, r, n, trials, seed, bins).map_err(to_js)
}
