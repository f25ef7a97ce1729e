use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::signed::SignedLogValue;
use crate::special::ln_gamma_diff;

/// `ln[(a)^{(m)} / (b)^{(m)}]` for `a, b > 0`, evaluated as a Gamma ratio
/// with a small shift so nothing of size `m ln m` is ever subtracted.
pub(crate) fn ln_rising_ratio(a: f64, b: f64, m: u64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if m == 0 || a == b {
        return 0.0;
    }
    let d = a - b;
    ln_gamma_diff(b + m as f64, d) - ln_gamma_diff(b, d)
}

/// Which normalising sequence to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BSeqKind {
    /// `b_n = Π_{k=1}^{n−1} (k+θ)/(k+α+θ)`, the `K_n` martingale weight.
    Block,
    /// `b_n(p) = Π_{k=1}^{n−1} (k+αp+θ)/(k+θ)`, the `p`-th factorial moment growth.
    BlockP(u32),
    /// `b_{r,n} = Π_{k=r}^{n−1} (k+θ)/(k−r+θ+α)`, the `K_{r,n}` martingale weight
    /// (identically 1 for `n ≤ r`).
    SizeR(u64),
}

pub fn b_seq(kind: BSeqKind, params: &ModelParams, n: u64) -> Result<SignedLogValue> {
    if n < 1 {
        return Err(Error::Domain("b-sequences are indexed from n = 1".into()));
    }
    let (a, t) = (params.alpha(), params.theta());
    let ln = match kind {
        BSeqKind::Block => ln_rising_ratio(1.0 + t, 1.0 + a + t, n - 1),
        BSeqKind::BlockP(p) => ln_rising_ratio(1.0 + a * f64::from(p) + t, 1.0 + t, n - 1),
        BSeqKind::SizeR(r) => {
            if r < 1 {
                return Err(Error::Domain("size class r must be ≥ 1".into()));
            }
            if n <= r {
                0.0
            } else {
                ln_rising_ratio(r as f64 + t, a + t, n - r)
            }
        }
    };
    Ok(SignedLogValue::from_ln(ln))
}

/// `β_{r,n} = b_{r,n}/b_{r,n+1}`: `(n−r+θ+α)/(n+θ)` for `n ≥ r`, else 1.
#[inline]
pub fn size_class_beta(params: &ModelParams, r: u64, n: u64) -> f64 {
    if n < r {
        1.0
    } else {
        (n as f64 - r as f64 + params.theta() + params.alpha()) / (n as f64 + params.theta())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn literal_product(kind: BSeqKind, p: &ModelParams, n: u64) -> f64 {
        let (a, t) = (p.alpha(), p.theta());
        match kind {
            BSeqKind::Block => (1..n).map(|k| (k as f64 + t) / (k as f64 + a + t)).product(),
            BSeqKind::BlockP(q) => (1..n)
                .map(|k| (k as f64 + a * f64::from(q) + t) / (k as f64 + t))
                .product(),
            BSeqKind::SizeR(r) => (r..n).map(|k| (k as f64 + t) / (k as f64 - r as f64 + t + a)).product(),
        }
    }

    #[test]
    fn examples() {
        let p = ModelParams::new(0.5, 0.5).unwrap();
        assert!((b_seq(BSeqKind::Block, &p, 2).unwrap().to_f64() - 0.75).abs() < 1e-15);
        assert!((b_seq(BSeqKind::SizeR(1), &p, 2).unwrap().to_f64() - 1.5).abs() < 1e-15);
        let p0 = ModelParams::new(0.5, 0.0).unwrap();
        assert!((b_seq(BSeqKind::BlockP(2), &p0, 2).unwrap().to_f64() - 2.0).abs() < 1e-15);
        for kind in [
            BSeqKind::Block,
            BSeqKind::BlockP(3),
            BSeqKind::SizeR(1),
            BSeqKind::SizeR(4),
        ] {
            assert_eq!(b_seq(kind, &p, 1).unwrap().to_f64(), 1.0);
        }
    }

    #[test]
    fn matches_literal_products() {
        for p in ModelParams::grid() {
            for kind in [
                BSeqKind::Block,
                BSeqKind::BlockP(2),
                BSeqKind::SizeR(1),
                BSeqKind::SizeR(3),
            ] {
                for n in [1u64, 2, 3, 7, 50, 400] {
                    let want = literal_product(kind, &p, n);
                    let got = b_seq(kind, &p, n).unwrap().to_f64();
                    assert!(((got - want) / want).abs() < 1e-12, "{kind:?} {p} n={n}");
                }
            }
        }
    }

    #[test]
    fn beta_links_consecutive_terms() {
        let p = ModelParams::new(0.3, -0.1).unwrap();
        for r in 1..4 {
            for n in 1..30 {
                let bn = b_seq(BSeqKind::SizeR(r), &p, n).unwrap().to_f64();
                let bn1 = b_seq(BSeqKind::SizeR(r), &p, n + 1).unwrap().to_f64();
                assert!((bn / bn1 - size_class_beta(&p, r, n)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn block_sequence_asymptotics() {
        // n^α b_n → Γ(α+θ+1)/Γ(θ+1)
        let p = ModelParams::new(0.5, 0.5).unwrap();
        let n = 1e8 as u64;
        let got = (n as f64).powf(0.5) * b_seq(BSeqKind::Block, &p, n).unwrap().to_f64();
        let want = crate::special::gamma(2.0) / crate::special::gamma(1.5);
        assert!(((got - want) / want).abs() < 1e-6);
    }
}
