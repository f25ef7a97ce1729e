use crate::error::{Error, Result};
use crate::signed::SignedLogValue;
use crate::special::ln_gamma_diff;

/// Products shorter than this are summed term by term.
const DIRECT_TERMS: u64 = 16;

fn ln_rising_positive(x: f64, n: u64) -> f64 {
    debug_assert!(x > 0.0);
    if n <= DIRECT_TERMS {
        (0..n).map(|i| (x + i as f64).ln()).sum()
    } else {
        ln_gamma_diff(x, n as f64)
    }
}

/// Rising factorial `a(a+1)···(a+n−1)`; `n = 0` gives 1.
///
/// Non-positive leading factors are peeled off one at a time so the sign is
/// exact (e.g. `a = θ ∈ (−α, 0)`); the positive tail goes through a Gamma
/// ratio.
pub fn rising_factorial(a: f64, n: u64) -> SignedLogValue {
    let mut sign = 1i8;
    let mut log = 0.0;
    let mut i = 0u64;
    while i < n {
        let f = a + i as f64;
        if f > 0.0 {
            break;
        }
        if f == 0.0 {
            return SignedLogValue::ZERO;
        }
        sign = -sign;
        log += (-f).ln();
        i += 1;
    }
    if i < n {
        log += ln_rising_positive(a + i as f64, n - i);
    }
    SignedLogValue::new(sign, log)
}

/// Falling factorial `a(a−1)···(a−p+1)`; `p = 0` gives 1.
pub fn falling_factorial(a: f64, p: u64) -> SignedLogValue {
    if p == 0 {
        return SignedLogValue::ONE;
    }
    rising_factorial(a - (p - 1) as f64, p)
}

/// Stirling number of the second kind `{p k}` by the triangular recurrence
/// `{n k} = k{n−1 k} + {n−1 k−1}`.
pub fn stirling2(p: u64, k: u64) -> Result<u128> {
    if k > p {
        return Err(Error::Domain(format!("stirling2 requires k ≤ p (p={p}, k={k})")));
    }
    let p = usize::try_from(p).map_err(|_| Error::Domain("p too large".into()))?;
    let k = k as usize;
    let mut row = vec![0u128; k + 1];
    row[0] = 1;
    for n in 1..=p {
        for j in (1..=k.min(n)).rev() {
            row[j] = (j as u128)
                .checked_mul(row[j])
                .and_then(|v| v.checked_add(row[j - 1]))
                .ok_or_else(|| Error::Numerical(format!("stirling2({p},{k}) overflows u128")))?;
        }
        row[0] = 0;
    }
    Ok(row[k])
}
