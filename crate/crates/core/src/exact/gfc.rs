//! Generalized factorial coefficients `C(n, k; α)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::signed::SignedLogValue;

/// Largest `n` accepted by the exact-rational oracle.
pub const ORACLE_MAX_N: u64 = 25;

/// `ln(e^a + e^b)`
#[inline]
fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Advances `row = [ln C(n,0), …, ln C(n,n)]` to row `n+1` in place.
///
/// `C(n+1,k) = (n − kα)·C(n,k) + α·C(n,k−1)`; both terms are nonnegative
/// for `k ≤ n` and `α < 1`.
fn advance_row(row: &mut Vec<f64>, n: u64, alpha: f64) {
    let ln_alpha = alpha.ln();
    row.push(f64::NEG_INFINITY);
    for k in (1..=n as usize + 1).rev() {
        let stay = if k as u64 <= n {
            row[k] + (n as f64 - k as f64 * alpha).ln()
        } else {
            f64::NEG_INFINITY
        };
        row[k] = log_add(stay, ln_alpha + row[k - 1]);
    }
    row[0] = f64::NEG_INFINITY;
}

/// `ln C(n, k; α)` for `k = 0..=n` (index `k`; entry 0 is `−inf` for `n ≥ 1`).
pub fn gfc_log_row(n: u64, params: &ModelParams) -> Result<Vec<f64>> {
    params.require_positive_alpha()?;
    if n < 1 {
        return Err(Error::Domain("gfc row requires n ≥ 1".into()));
    }
    let alpha = params.alpha();
    let mut row = vec![f64::NEG_INFINITY, alpha.ln()];
    for m in 1..n {
        advance_row(&mut row, m, alpha);
    }
    Ok(row)
}

/// Lower-triangular table of `ln C(n, k; α)`, `1 ≤ k ≤ n ≤ n_max`.
#[derive(Debug, Clone)]
pub struct GfcTable {
    n_max: u64,
    alpha: f64,
    // row n occupies [n(n−1)/2, n(n+1)/2), entry k−1 holds ln C(n,k)
    ln_values: Vec<f64>,
}

impl GfcTable {
    pub fn n_max(&self) -> u64 {
        self.n_max
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn offset(n: u64) -> usize {
        (n * (n - 1) / 2) as usize
    }

    /// `ln C(n, k; α)`; `−inf` outside `1 ≤ k ≤ n`.
    pub fn ln(&self, n: u64, k: u64) -> f64 {
        assert!(n >= 1 && n <= self.n_max, "n={n} outside table");
        if k == 0 || k > n {
            return f64::NEG_INFINITY;
        }
        self.ln_values[Self::offset(n) + (k - 1) as usize]
    }

    pub fn get(&self, n: u64, k: u64) -> SignedLogValue {
        SignedLogValue::new(if k >= 1 && k <= n { 1 } else { 0 }, self.ln(n, k))
    }

    pub fn value(&self, n: u64, k: u64) -> f64 {
        self.get(n, k).to_f64()
    }

    /// Row `n` as `(k, ln C(n,k))` pairs.
    pub fn row(&self, n: u64) -> impl Iterator<Item = (u64, f64)> + '_ {
        (1..=n).map(move |k| (k, self.ln(n, k)))
    }
}

/// Builds the table by the two-term recurrence seeded with `C(1,1;α) = α`.
pub fn gfc_table(n_max: u64, params: &ModelParams) -> Result<GfcTable> {
    params.require_positive_alpha()?;
    if n_max < 1 {
        return Err(Error::Domain("gfc_table requires n_max ≥ 1".into()));
    }
    let alpha = params.alpha();
    let mut ln_values = Vec::with_capacity((n_max * (n_max + 1) / 2) as usize);
    let mut row = vec![f64::NEG_INFINITY, alpha.ln()];
    ln_values.extend_from_slice(&row[1..]);
    for n in 1..n_max {
        advance_row(&mut row, n, alpha);
        ln_values.extend_from_slice(&row[1..]);
    }
    Ok(GfcTable {
        n_max,
        alpha,
        ln_values,
    })
}

/// Exact rational `C(n,k;α) = (1/k!) Σ_{j=1}^{k} (−1)^j C(k,j) (−jα)^{(n)}`.
///
/// This is the alternating-sum definition evaluated without rounding; it is
/// only used to check [`gfc_table`].
pub fn gfc_oracle(n: u64, k: u64, alpha: &BigRational) -> Result<BigRational> {
    if n > ORACLE_MAX_N {
        return Err(Error::OracleScope(format!(
            "gfc oracle limited to n ≤ {ORACLE_MAX_N} (n={n})"
        )));
    }
    if k < 1 || k > n {
        return Err(Error::Domain(format!("gfc oracle requires 1 ≤ k ≤ n (n={n}, k={k})")));
    }
    if !alpha.is_positive() || *alpha >= BigRational::one() {
        return Err(Error::Domain("gfc oracle requires rational α in (0,1)".into()));
    }
    let mut sum = BigRational::zero();
    let mut binom = BigInt::one();
    for j in 1..=k {
        binom = binom * BigInt::from(k - j + 1) / BigInt::from(j);
        let start = -(alpha * BigRational::from_integer(BigInt::from(j)));
        let mut rising = BigRational::one();
        for i in 0..n {
            rising *= &start + BigRational::from_integer(BigInt::from(i));
        }
        let term = rising * BigRational::from_integer(binom.clone());
        if j % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let k_fact: BigInt = (1..=k).map(BigInt::from).product();
    Ok(sum / BigRational::from_integer(k_fact))
}

/// Largest relative error of [`gfc_table`] against [`gfc_oracle`] over
/// `1 ≤ k ≤ n ≤ n_max`, for each rational `α = num/den` given.
pub fn gfc_oracle_check(n_max: u64, alphas: &[(i64, i64)]) -> Result<f64> {
    if n_max > ORACLE_MAX_N {
        return Err(Error::OracleScope(format!(
            "gfc oracle limited to n ≤ {ORACLE_MAX_N} (n={n_max})"
        )));
    }
    let mut worst = 0.0f64;
    for &(num, den) in alphas {
        let a = BigRational::new(num.into(), den.into());
        let params = ModelParams::new(num as f64 / den as f64, 0.0)?;
        let table = gfc_table(n_max, &params)?;
        for n in 1..=n_max {
            for k in 1..=n {
                let exact = gfc_oracle(n, k, &a)?
                    .to_f64()
                    .ok_or_else(|| Error::Numerical("oracle value not representable".into()))?;
                worst = worst.max(((table.value(n, k) - exact) / exact).abs());
            }
        }
    }
    Ok(worst)
}
