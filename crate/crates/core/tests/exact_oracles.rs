use ep_core::exact::*;
use ep_core::special::ln_gamma_diff;
use ep_core::ModelParams;
use num_rational::BigRational;
use num_traits::ToPrimitive;

fn grid_plus() -> Vec<ModelParams> {
    let mut g = ModelParams::grid();
    g.push(ModelParams::new(0.5, 0.5).unwrap());
    g.push(ModelParams::new(0.6, -0.55).unwrap());
    g
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn normalization_and_recursion_agree() {
    for q in grid_plus() {
        for n in 1..=200 {
            let e = exact_dist_kn(&q, n).unwrap();
            let d = dp_dist_oracle(&q, n).unwrap();
            assert!((e.total_mass() - 1.0).abs() <= 1e-10, "{q} n={n}");
            assert!((d.total_mass() - 1.0).abs() <= 1e-10, "{q} n={n}");
            assert!(e.max_abs_diff(&d) <= 1e-10, "{q} n={n}");
        }
    }
}

#[test]
fn large_table_still_normalised() {
    let q = ModelParams::new(0.5, 1.0).unwrap();
    let e = exact_dist_kn(&q, 10_000).unwrap();
    assert!((e.total_mass() - 1.0).abs() <= 1e-10);
    assert!(rel(e.mean(), mean_kn_exact(&q, 10_000).unwrap()) < 1e-10);
}

#[test]
fn row_sum_identity() {
    // Σ_k (θ/α)^{(k)} C(n,k) = (θ)^{(n)}
    for q in grid_plus().into_iter().filter(|q| !q.theta_is_zero()) {
        let t = gfc_table(120, &q).unwrap();
        for n in [1u64, 2, 10, 60, 120] {
            let mut sum = ep_core::signed::SignedSum::new();
            for (k, _) in t.row(n) {
                sum.push(rising_factorial(q.theta() / q.alpha(), k) * t.get(n, k));
            }
            let want = rising_factorial(q.theta(), n);
            let got = sum.total();
            assert_eq!(got.sign(), want.sign());
            assert!((got.log_magnitude() - want.log_magnitude()).abs() <= 1e-10, "{q} n={n}");
        }
    }
}

#[test]
fn gfc_recursion_matches_rational_oracle() {
    for (num, den) in [(1, 4), (1, 2), (3, 4)] {
        let a = BigRational::new(num.into(), den.into());
        let q = ModelParams::new(num as f64 / den as f64, 1.0).unwrap();
        let t = gfc_table(ORACLE_MAX_N, &q).unwrap();
        for n in 1..=ORACLE_MAX_N {
            for k in 1..=n {
                let exact = gfc_oracle(n, k, &a).unwrap().to_f64().unwrap();
                assert!(rel(t.value(n, k), exact) <= 1e-12, "α={num}/{den} n={n} k={k}");
            }
        }
    }
}

#[test]
fn moments_match_enumeration() {
    for q in grid_plus() {
        for n in 1..=8u64 {
            let law = enumerate_joint_oracle(&q, n).unwrap();
            for p in 1..=4u32 {
                let want = law.moment_kn(p);
                assert!(
                    rel(raw_moment_kn(&q, n, u64::from(p)).unwrap(), want) <= 1e-10,
                    "{q} n={n} p={p}"
                );
                for r in 1..=n {
                    let want = law.moment_krn(r, p);
                    let got = raw_moment_krn(&q, n, r, u64::from(p)).unwrap();
                    assert!((got - want).abs() <= 1e-10 * want.max(1.0), "{q} n={n} r={r} p={p}");
                }
            }
        }
    }
}

#[test]
fn cross_moments_match_martingale_oracle() {
    // K_{r,n} is F_n-measurable and M_n → (Γ(1+α+θ)/Γ(1+θ)) S, so
    // E[X S] = Γ(n+θ)/Γ(n+α+θ) · E[X (K_n + θ/α)] for X = K_n, K_{r,n}
    for q in grid_plus() {
        let shift = q.theta() / q.alpha();
        for n in 1..=8u64 {
            let law = enumerate_joint_oracle(&q, n).unwrap();
            let scale = (-ln_gamma_diff(n as f64 + q.theta(), q.alpha())).exp();
            let kk = |c: &[u64]| c.iter().sum::<u64>() as f64;
            let want = scale * law.expect(|c| kk(c) * (kk(c) + shift));
            assert!(rel(cross_moment_kn_s(&q, n).unwrap(), want) <= 1e-10, "{q} n={n}");
            for r in 1..=n {
                let want = scale * law.expect(|c| c[(r - 1) as usize] as f64 * (kk(c) + shift));
                let got = cross_moment_krn_s(&q, n, r).unwrap();
                assert!(
                    (got - want).abs() <= 1e-10 * want.max(1e-300),
                    "{q} n={n} r={r}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn cross_moments_at_one_equal_the_limit_mean() {
    for q in grid_plus() {
        let s1 = limit_moment_s(&q, 1).unwrap();
        assert!(rel(cross_moment_kn_s(&q, 1).unwrap(), s1) <= 1e-12);
        assert!(rel(cross_moment_krn_s(&q, 1, 1).unwrap(), s1) <= 1e-12);
    }
}

#[test]
fn scaled_moments_approach_the_limit() {
    let n = 1_000_000u64;
    for q in ModelParams::grid() {
        for p in 1..=3u64 {
            let scaled = raw_moment_kn(&q, n, p).unwrap() / (n as f64).powf(q.alpha() * p as f64);
            let lim = limit_moment_s(&q, p).unwrap();
            assert!(rel(scaled, lim) < 0.05, "{q} p={p}: {scaled} vs {lim}");
        }
    }
}

#[test]
fn size_classes_account_for_elements() {
    for q in grid_plus() {
        for n in 1..=50u64 {
            let total: f64 = (1..=n)
                .map(|r| r as f64 * falling_moment_krn(&q, n, r, 1).unwrap())
                .sum();
            assert!((total - n as f64).abs() <= 1e-9 * n as f64, "{q} n={n}");
        }
    }
}

#[test]
fn factorial_moments_flag_heavy_cancellation() {
    let q = ModelParams::new(0.3, 1.0).unwrap();
    for p in 1..=6 {
        let v = falling_moment_kn(&q, 1_000_000, p).unwrap();
        assert!(v.value > 0.0 && !v.flagged, "p={p} lost {}", v.digits_lost);
    }
}
