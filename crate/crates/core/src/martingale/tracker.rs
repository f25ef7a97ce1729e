//! Online martingale bookkeeping along one trajectory.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::increments::p_q;
use crate::error::{Error, Result};
use crate::exact::{b_seq, size_class_beta, BSeqKind};
use crate::params::ModelParams;
use crate::partition::{PartitionState, StepKind, StepOutcome};

/// `Ã_{r,n} = A_{r,n}/b_{r,n}`, advanced by `Ã_{n+1} = β_{r,n} Ã_n + p_{r,n}`.
///
/// Storing the ratio keeps the value `O(n^α)` while `b_{r,n}` itself grows
/// like `n^{r−α}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AAccumulator {
    pub r: u64,
    /// The `n` at which `a_tilde` is current.
    pub n: u64,
    pub a_tilde: f64,
}

impl AAccumulator {
    /// `A_{r,1} = 0`.
    pub fn new(r: u64) -> Self {
        assert!(r >= 1, "size class r must be ≥ 1");
        Self { r, n: 1, a_tilde: 0.0 }
    }

    /// Moves from `n` to `n+1` using the state at `n`; states must arrive in order.
    pub fn update(&mut self, state: &PartitionState, params: &ModelParams) -> Result<()> {
        if state.n() != self.n {
            return Err(Error::OutOfOrder {
                expected: self.n,
                got: state.n(),
            });
        }
        let (p, _) = p_q(state, params, self.r);
        self.advance(size_class_beta(params, self.r, self.n), p);
        Ok(())
    }

    #[inline]
    fn advance(&mut self, beta: f64, p: f64) {
        self.a_tilde = self.a_tilde * beta + p;
        self.n += 1;
    }

    /// `A_{r,n}` itself (may overflow for large `r`, `n`).
    pub fn a_value(&self, params: &ModelParams) -> Result<f64> {
        Ok(self.a_tilde * b_seq(BSeqKind::SizeR(self.r), params, self.n)?.to_f64())
    }
}

/// Per-size-class part of a [`TrajectoryRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeClassRecord {
    pub r: u64,
    /// `K_{r,n}`.
    pub k_r: u64,
    /// `ln b_{r,n}`.
    pub log_b_r: f64,
    /// `A_{r,n}/b_{r,n}`.
    pub a_tilde: f64,
    /// `M_{r,n}/b_{r,n} = K_{r,n} − A_{r,n}/b_{r,n}`.
    pub m_tilde: f64,
    /// Predictable quadratic variation divided by `b_{r,n}²`.
    pub qv_predictable: f64,
    /// Realized `Σ (ΔM_{r,k})²` divided by `b_{r,n}²`.
    pub qv_realized: f64,
}

/// Snapshot of one trajectory at a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub n: u64,
    /// `K_n`.
    pub k: u64,
    /// `ln b_n`.
    pub log_b: f64,
    /// `M_n = b_n(K_n+θ/α)`; absent when `α = 0`.
    pub m: Option<f64>,
    /// `⟨M⟩_n`, the sum of conditional variances of the `K_n` martingale.
    pub qv_predictable: f64,
    /// `[M]_n`, the sum of squared increments.
    pub qv_realized: f64,
    pub size_classes: Vec<SizeClassRecord>,
    /// `K_N/N^α` at the trajectory's terminal horizon, when computed.
    pub s_hat: Option<f64>,
}

impl TrajectoryRecord {
    pub fn size_class(&self, r: u64) -> Option<&SizeClassRecord> {
        self.size_classes.iter().find(|c| c.r == r)
    }
}

#[derive(Debug, Clone)]
struct SizeTrack {
    acc: AAccumulator,
    qv_pred: f64,
    qv_real: f64,
    pq: (f64, f64),
}

/// Advances a [`PartitionState`] one step at a time while updating `b_n`, the
/// accumulators `Ã_{r,n}` for every tracked `r`, and both quadratic variations.
#[derive(Debug, Clone)]
pub struct MartingaleTracker {
    params: ModelParams,
    b: f64,
    qv_pred: f64,
    qv_real: f64,
    tracks: Vec<SizeTrack>,
}

impl MartingaleTracker {
    pub fn new(params: ModelParams, tracked_r: &[u64]) -> Self {
        Self {
            params,
            b: 1.0,
            qv_pred: 0.0,
            qv_real: 0.0,
            tracks: tracked_r
                .iter()
                .map(|&r| SizeTrack {
                    acc: AAccumulator::new(r),
                    qv_pred: 0.0,
                    qv_real: 0.0,
                    pq: (0.0, 0.0),
                })
                .collect(),
        }
    }

    pub fn tracked(&self) -> impl Iterator<Item = u64> + '_ {
        self.tracks.iter().map(|t| t.acc.r)
    }

    /// One sampler step with all online updates. The forced first step only
    /// initialises (`b_1 = 1`, `A_{r,1} = 0`).
    #[inline]
    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut PartitionState, rng: &mut R) -> StepOutcome {
        self.observe(state, |s| s.step(rng))
    }

    /// Applies a given outcome with the same updates (for driving a state by hand).
    pub fn step_with(&mut self, state: &mut PartitionState, kind: StepKind) -> StepOutcome {
        self.observe(state, |s| {
            s.apply(kind);
            StepOutcome { kind }
        })
    }

    fn observe(
        &mut self,
        state: &mut PartitionState,
        advance: impl FnOnce(&mut PartitionState) -> StepOutcome,
    ) -> StepOutcome {
        if state.n() == 0 {
            return advance(state);
        }
        let (a, t) = (self.params.alpha(), self.params.theta());
        let n = state.n();
        let nf = n as f64;
        let p_new = (a * state.k() as f64 + t) / (nf + t);
        let b_next = self.b * (nf + t) / (nf + a + t);
        for tr in &mut self.tracks {
            tr.pq = p_q(state, &self.params, tr.acc.r);
        }
        let outcome = advance(state);

        let xi = outcome.delta_k() as f64;
        let dm = b_next * (xi - p_new);
        self.qv_pred += b_next * b_next * p_new * (1.0 - p_new);
        self.qv_real += dm * dm;
        self.b = b_next;

        for tr in &mut self.tracks {
            let (p, q) = tr.pq;
            let r = tr.acc.r;
            let beta = size_class_beta(&self.params, r, n);
            let eta = outcome.delta_kr(r) as f64;
            let mu = p - q;
            let b2 = beta * beta;
            tr.qv_pred = tr.qv_pred * b2 + (p + q - mu * mu);
            tr.qv_real = tr.qv_real * b2 + (eta - mu) * (eta - mu);
            tr.acc.advance(beta, p);
        }
        outcome
    }

    /// Snapshot at the state's current `n`; `ln b_n` is recomputed exactly and
    /// the running `b_n` resynchronised to it.
    pub fn record(&mut self, state: &PartitionState) -> Result<TrajectoryRecord> {
        let n = state.n().max(1);
        let log_b = b_seq(BSeqKind::Block, &self.params, n)?.log_magnitude();
        self.b = log_b.exp();
        let m = (self.params.alpha() > 0.0)
            .then(|| self.b * (state.k() as f64 + self.params.theta() / self.params.alpha()));
        let mut size_classes = Vec::with_capacity(self.tracks.len());
        for tr in &self.tracks {
            let r = tr.acc.r;
            let k_r = state.count(r);
            size_classes.push(SizeClassRecord {
                r,
                k_r,
                log_b_r: b_seq(BSeqKind::SizeR(r), &self.params, n)?.log_magnitude(),
                a_tilde: tr.acc.a_tilde,
                m_tilde: k_r as f64 - tr.acc.a_tilde,
                qv_predictable: tr.qv_pred,
                qv_realized: tr.qv_real,
            });
        }
        Ok(TrajectoryRecord {
            n: state.n(),
            k: state.k(),
            log_b,
            m,
            qv_predictable: self.qv_pred,
            qv_realized: self.qv_real,
            size_classes,
            s_hat: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::b_seq;
    use crate::partition::trajectory_rng;

    fn p(a: f64, t: f64) -> ModelParams {
        ModelParams::new(a, t).unwrap()
    }

    #[test]
    fn accumulator_first_update() {
        let q = p(0.5, 0.5);
        let s = PartitionState::from_counts(q, &[(1, 1)]);
        let mut acc = AAccumulator::new(1);
        acc.update(&s, &q).unwrap();
        assert!((acc.a_value(&q).unwrap() - 1.0).abs() < 1e-14);
        assert!(matches!(
            acc.update(&s, &q),
            Err(Error::OutOfOrder { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn accumulator_empty_sum() {
        // no singletons at any observed n ⇒ nothing is added to A_{2,n}
        let q = p(0.5, 0.5);
        let mut acc = AAccumulator {
            r: 2,
            n: 2,
            a_tilde: 0.0,
        };
        for n in 2..6u64 {
            acc.update(&PartitionState::from_counts(q, &[(n, 1)]), &q).unwrap();
        }
        assert_eq!(acc.a_tilde, 0.0);
    }

    #[test]
    fn rescaled_recursion_matches_literal_sum() {
        // A_{r,n} = Σ_{k=1}^{n−1} b_{r,k+1} p_{r,k}, summed literally, for n ≤ 1000
        for q in [p(0.5, 0.5), p(0.3, -0.1), p(0.8, 0.0)] {
            let mut rng = trajectory_rng(11, 0);
            let mut s = PartitionState::new(q);
            s.step(&mut rng);
            let rs = [1u64, 2, 3];
            let mut accs: Vec<_> = rs.iter().map(|&r| AAccumulator::new(r)).collect();
            let mut literal = [0.0f64; 3];
            for _ in 1..1000 {
                for (i, &r) in rs.iter().enumerate() {
                    let (pp, _) = p_q(&s, &q, r);
                    let b = b_seq(BSeqKind::SizeR(r), &q, s.n() + 1).unwrap().to_f64();
                    literal[i] += b * pp;
                    accs[i].update(&s, &q).unwrap();
                }
                s.step(&mut rng);
            }
            for (i, acc) in accs.iter().enumerate() {
                let got = acc.a_value(&q).unwrap();
                assert!(
                    (got - literal[i]).abs() <= 1e-10 * literal[i].abs().max(1.0),
                    "{q} r={}",
                    rs[i]
                );
            }
        }
    }

    #[test]
    fn tracker_agrees_with_standalone_pieces() {
        let q = p(0.5, 0.5);
        let mut rng = trajectory_rng(3, 9);
        let mut s = PartitionState::new(q);
        let mut tr = MartingaleTracker::new(q, &[1, 2]);
        let mut acc = AAccumulator::new(1);
        let mut prev_a = 0.0;
        for _ in 0..5000 {
            if s.n() >= 1 {
                acc.update(&s, &q).unwrap();
            }
            tr.step(&mut s, &mut rng);
            let a_now = tr.tracks[0].acc.a_value(&q).unwrap();
            assert!(a_now >= prev_a);
            prev_a = a_now;
        }
        let rec = tr.record(&s).unwrap();
        assert_eq!(rec.size_class(1).unwrap().a_tilde, acc.a_tilde);
        assert_eq!(rec.n, 5000);
        let m = crate::martingale::m_value(&s, &q).unwrap();
        assert!((rec.m.unwrap() - m).abs() < 1e-14 * m);
        assert!(rec.qv_predictable > 0.0 && rec.qv_realized > 0.0);
    }

    #[test]
    fn step_with_replays_outcomes() {
        let q = p(0.5, 0.5);
        let mut s = PartitionState::new(q);
        let mut tr = MartingaleTracker::new(q, &[1]);
        tr.step_with(&mut s, StepKind::NewBlock);
        tr.step_with(&mut s, StepKind::NewBlock);
        let rec = tr.record(&s).unwrap();
        // Ã_{1,2} = p_{1,1} = 2/3
        assert!((rec.size_class(1).unwrap().a_tilde - 2.0 / 3.0).abs() < 1e-15);
        assert!((rec.m.unwrap() - 2.25).abs() < 1e-14);
    }
}
