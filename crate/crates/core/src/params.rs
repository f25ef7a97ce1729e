use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The pair `(α, θ)` with `α ∈ [0,1)` and `θ > −α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    alpha: f64,
    theta: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        let ok = alpha.is_finite() && theta.is_finite() && (0.0..1.0).contains(&alpha) && theta > -alpha;
        if ok {
            Ok(Self { alpha, theta })
        } else {
            Err(Error::InvalidParams { alpha, theta })
        }
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Closed forms that divide by α call this first.
    pub fn require_positive_alpha(&self) -> Result<()> {
        if self.alpha > 0.0 {
            Ok(())
        } else {
            Err(Error::AlphaZero(self.alpha))
        }
    }

    /// `θ = 0` selects the analytic-limit branch of the closed forms.
    #[inline]
    pub fn theta_is_zero(&self) -> bool {
        self.theta == 0.0
    }

    /// Asymptotic block frequency `p_α(r) = α(1−α)^{(r−1)}/r!`.
    pub fn block_frequency(&self, r: u64) -> f64 {
        assert!(r >= 1, "block size must be positive");
        let a = self.alpha;
        // α · Π_{j=1}^{r−1} (j − α)/(j) / r
        let mut v = a / r as f64;
        for j in 1..r {
            v *= (j as f64 - a) / j as f64;
        }
        v
    }

    /// The acceptance grid α ∈ {0.3, 0.5, 0.8} × θ ∈ {−0.1, 0, 1}.
    pub fn grid() -> Vec<ModelParams> {
        let mut out = Vec::with_capacity(9);
        for &a in &[0.3, 0.5, 0.8] {
            for &t in &[-0.1, 0.0, 1.0] {
                out.push(ModelParams { alpha: a, theta: t });
            }
        }
        out
    }
}

impl std::fmt::Display for ModelParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(α={}, θ={})", self.alpha, self.theta)
    }
}
