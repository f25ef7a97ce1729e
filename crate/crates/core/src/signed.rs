//! Real numbers carried as `sign · exp(log_magnitude)`.

use std::cmp::Ordering;
use std::ops::{Div, Mul, Neg};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedLogValue {
    sign: i8,
    log_magnitude: f64,
}

impl SignedLogValue {
    pub const ZERO: Self = Self {
        sign: 0,
        log_magnitude: f64::NEG_INFINITY,
    };
    pub const ONE: Self = Self {
        sign: 1,
        log_magnitude: 0.0,
    };

    /// Builds a value from a sign in {−1, 0, +1} and a natural-log magnitude.
    pub fn new(sign: i8, log_magnitude: f64) -> Self {
        match sign.cmp(&0) {
            Ordering::Equal => Self::ZERO,
            Ordering::Greater => Self { sign: 1, log_magnitude },
            Ordering::Less => Self {
                sign: -1,
                log_magnitude,
            },
        }
    }

    pub fn from_ln(log_magnitude: f64) -> Self {
        Self::new(1, log_magnitude)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self::new(if x > 0.0 { 1 } else { -1 }, x.abs().ln())
        }
    }

    #[inline]
    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Natural log of `|value|`; `−inf` for zero.
    #[inline]
    pub fn log_magnitude(&self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_magnitude
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_magnitude.exp(),
        }
    }

    pub fn abs(&self) -> Self {
        Self::new(self.sign.abs(), self.log_magnitude)
    }

    pub fn recip(&self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        Self::new(self.sign, -self.log_magnitude)
    }

    pub fn powi(&self, p: i32) -> Self {
        if p == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        let sign = if self.sign < 0 && p % 2 != 0 { -1 } else { 1 };
        Self::new(sign, self.log_magnitude * f64::from(p))
    }

    /// Sum of two values by log-sum-exp with sign resolution.
    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: Self) -> Self {
        let mut acc = SignedSum::new();
        acc.push(self);
        acc.push(other);
        acc.total()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: Self) -> Self {
        self.add(-other)
    }
}

impl Mul for SignedLogValue {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        Self::new(self.sign * rhs.sign, self.log_magnitude + rhs.log_magnitude)
    }
}

impl Div for SignedLogValue {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Neg for SignedLogValue {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.sign, self.log_magnitude)
    }
}

/// Running log-sum-exp accumulator over signed terms.
///
/// Positive and negative terms are summed separately and only subtracted at
/// the end, so the loss of significance is measurable: see
/// [`SignedSum::digits_lost`].
#[derive(Debug, Clone, Copy)]
pub struct SignedSum {
    pos: LogAcc,
    neg: LogAcc,
}

#[derive(Debug, Clone, Copy)]
struct LogAcc {
    max: f64,
    scaled: f64,
}

impl LogAcc {
    const EMPTY: Self = Self {
        max: f64::NEG_INFINITY,
        scaled: 0.0,
    };

    fn push(&mut self, log_mag: f64) {
        if log_mag == f64::NEG_INFINITY {
            return;
        }
        if log_mag > self.max {
            self.scaled = self.scaled * (self.max - log_mag).exp() + 1.0;
            self.max = log_mag;
        } else {
            self.scaled += (log_mag - self.max).exp();
        }
    }

    fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

/// Significant digits a double can carry; a difference that loses more than
/// this many is indistinguishable from zero.
const F64_DIGITS: f64 = 15.95;

impl Default for SignedSum {
    fn default() -> Self {
        Self::new()
    }
}

impl SignedSum {
    pub fn new() -> Self {
        Self {
            pos: LogAcc::EMPTY,
            neg: LogAcc::EMPTY,
        }
    }

    pub fn push(&mut self, v: SignedLogValue) {
        match v.sign {
            1 => self.pos.push(v.log_magnitude),
            -1 => self.neg.push(v.log_magnitude),
            _ => {}
        }
    }

    pub fn total(&self) -> SignedLogValue {
        let lp = self.pos.ln();
        let ln = self.neg.ln();
        if lp == ln {
            return SignedLogValue::ZERO;
        }
        let (sign, big, small) = if lp > ln { (1, lp, ln) } else { (-1, ln, lp) };
        // big + ln(1 − e^{small−big})
        let d = small - big;
        let log_mag = big + (-(d.exp())).ln_1p();
        if log_mag.is_finite() {
            SignedLogValue::new(sign, log_mag)
        } else {
            SignedLogValue::ZERO
        }
    }

    /// Decimal digits cancelled when subtracting the negative mass from the
    /// positive mass (0 when all terms share a sign).
    pub fn digits_lost(&self) -> f64 {
        let big = self.pos.ln().max(self.neg.ln());
        if big == f64::NEG_INFINITY {
            return 0.0;
        }
        let t = self.total();
        if t.is_zero() {
            return f64::INFINITY;
        }
        ((big - t.log_magnitude) / std::f64::consts::LN_10).max(0.0)
    }

    /// The result is noise at double precision.
    pub fn underflowed(&self) -> bool {
        self.digits_lost() > F64_DIGITS
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn arithmetic_basics() {
        let a = SignedLogValue::from_f64(-0.09);
        assert_eq!(a.sign(), -1);
        assert!((a.to_f64() + 0.09).abs() < 0.09 * 1e-14);
        let b = SignedLogValue::from_f64(3.0) * SignedLogValue::from_f64(-2.0);
        assert!((b.to_f64() + 6.0).abs() < 1e-14);
        let c = SignedLogValue::from_f64(1.0).add(SignedLogValue::from_f64(-1.0));
        assert!(c.is_zero());
        assert_eq!(SignedLogValue::ZERO.powi(0), SignedLogValue::ONE);
        assert_eq!(SignedLogValue::from_f64(-2.0).powi(3).sign(), -1);
    }

    #[test]
    fn cancellation_is_measured() {
        let mut s = SignedSum::new();
        s.push(SignedLogValue::from_f64(1.0));
        s.push(SignedLogValue::from_f64(-(1.0 - 1e-12)));
        assert!(s.digits_lost() > 11.5 && s.digits_lost() < 12.5);
        assert!(!s.underflowed());
    }

    proptest! {
        #[test]
        fn linear_roundtrip(m in 1e-20f64..1e20, neg in any::<bool>()) {
            // log storage costs |ln x|·ε relative; 1e−14 holds for |ln x| ≲ 46
            let x = if neg { -m } else { m };
            let back = SignedLogValue::from_f64(x).to_f64();
            if x == 0.0 {
                prop_assert_eq!(back, 0.0);
            } else {
                prop_assert!(((back - x) / x).abs() <= 1e-14);
            }
        }

        #[test]
        fn addition_matches_linear(x in -1e6f64..1e6, y in -1e6f64..1e6) {
            let s = SignedLogValue::from_f64(x).add(SignedLogValue::from_f64(y)).to_f64();
            let want = x + y;
            prop_assert!((s - want).abs() <= 1e-9 * (x.abs() + y.abs()).max(1e-300));
        }

        #[test]
        fn product_matches_linear(x in -1e100f64..1e100, y in -1e100f64..1e100) {
            let p = (SignedLogValue::from_f64(x) * SignedLogValue::from_f64(y)).to_f64();
            let want = x * y;
            if want == 0.0 {
                prop_assert_eq!(p, 0.0);
            } else {
                prop_assert!(((p - want) / want).abs() <= 1e-12);
            }
        }
    }
}
