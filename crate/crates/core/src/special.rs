//! Log-gamma machinery tuned for ratios of Gamma functions at large arguments.
//!
//! Everything is built on [`ln_gamma_diff`], which evaluates
//! `ln Γ(x + d) − ln Γ(x)` without forming either log-gamma separately once the
//! arguments are large. At `x ≈ 10^8` the two log-gammas are ≈ 2·10^9, so the
//! naive difference would throw away seven significant digits.

use std::f64::consts::PI;

/// Arguments are shifted up to this bound before the asymptotic series.
const SERIES_MIN: f64 = 20.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Tail of Stirling's series, `ln Γ(z) − [(z−½)ln z − z + ½ln 2π]`.
fn stirling_tail(z: f64) -> f64 {
    let w = 1.0 / z;
    let w2 = w * w;
    w * (1.0 / 12.0 - w2 * (1.0 / 360.0 - w2 * (1.0 / 1260.0 - w2 * (1.0 / 1680.0 - w2 / 1188.0))))
}

/// `ln Γ(x + d) − ln Γ(x)` for `x > 0` and `x + d > 0`.
pub fn ln_gamma_diff(x: f64, d: f64) -> f64 {
    debug_assert!(x > 0.0 && x + d > 0.0, "ln_gamma_diff({x}, {d})");
    if d == 0.0 {
        return 0.0;
    }
    let mut x = x;
    let mut acc = 0.0;
    // ln Γ(z) = ln Γ(z+1) − ln z, applied to both arguments at once.
    while x < SERIES_MIN || x + d < SERIES_MIN {
        acc -= (d / x).ln_1p();
        x += 1.0;
    }
    let y = x + d;
    acc + (x - 0.5) * (d / x).ln_1p() + d * y.ln() - d + stirling_tail(y) - stirling_tail(x)
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires a positive argument, got {x}");
    if x >= SERIES_MIN {
        return (x - 0.5) * x.ln() - x + HALF_LN_2PI + stirling_tail(x);
    }
    // Shift to the series region and undo with an exact product of logs.
    let mut z = x;
    let mut prod = 1.0;
    while z < SERIES_MIN {
        prod *= z;
        z += 1.0;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + stirling_tail(z) - prod.ln()
}

/// `Γ(x)` for `x > 0` (overflows to `inf` past x ≈ 171).
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// `ln n!`
pub fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `ln C(n, k)` for `k ≤ n`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Standard normal CDF through `erfc`; absolute error well below 1e−15.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF (Acklam's rational approximation, refined by
/// one Halley step against [`normal_cdf`]).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile needs p in (0,1), got {p}");
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let lo = 0.02425;
    let x = if p < lo {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - lo {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-15);
        assert!((ln_gamma(2.0)).abs() < 1e-15);
        assert!(rel(gamma(0.5), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(1.5), PI.sqrt() / 2.0) < 1e-14);
        assert!(rel(gamma(5.0), 24.0) < 1e-14);
        assert!(rel(ln_gamma(100.0), 359.134_205_369_575_4) < 1e-15);
        assert!(rel(gamma(0.1), 9.513_507_698_668_732) < 1e-14);
        assert!(rel(gamma(1e-3), 999.423_772_484_595_3) < 1e-13);
    }

    #[test]
    fn matches_libm_lgamma() {
        for i in 1..400 {
            let x = i as f64 * 0.173;
            let want = libm::lgamma(x);
            let got = ln_gamma(x);
            assert!(
                (got - want).abs() <= 1e-13 * want.abs().max(1.0),
                "x={x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn diff_is_consistent_with_direct_difference() {
        for &(x, d) in &[(0.3, 2.7), (5.0, 0.5), (25.0, -3.2), (0.7, 40.0), (1e3, 1e3)] {
            let direct = ln_gamma(x + d) - ln_gamma(x);
            assert!((ln_gamma_diff(x, d) - direct).abs() < 1e-11, "{x} {d}");
        }
    }

    #[test]
    fn diff_small_shift_at_huge_argument() {
        // Γ(x+α)/Γ(x) ≈ x^α (1 + α(α−1)/(2x))
        let x: f64 = 1e8;
        let a = 0.5;
        let want = a * x.ln() + (a * (a - 1.0) / (2.0 * x)).ln_1p();
        assert!((ln_gamma_diff(x, a) - want).abs() < 1e-14);
    }

    #[test]
    fn diff_integer_shift_is_a_product() {
        let x = 0.37;
        let direct: f64 = (0..30).map(|i| (x + i as f64).ln()).sum();
        assert!((ln_gamma_diff(x, 30.0) - direct).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_and_quantile() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-17);
        for &p in &[1e-10, 0.001, 0.02, 0.3, 0.5, 0.77, 0.99, 1.0 - 1e-9] {
            let x = normal_quantile(p);
            assert!(rel(normal_cdf(x), p) < 1e-12, "p={p}");
        }
    }

    #[test]
    fn binomials() {
        assert!(rel(ln_binomial(10, 3).exp(), 120.0) < 1e-13);
        assert_eq!(ln_binomial(7, 0), 0.0);
    }
}
