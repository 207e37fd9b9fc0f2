//! Moving-horizon reliability estimate of a trajectory predictor.
//!
//! Predictions made `T_est` prediction ticks ago are compared with the agent
//! positions measured since. The confidence-weighted displacement error is
//! squashed to `[0, 1]` and filtered with momentum into the reliability `omega`
//! that blends predictor and fallback costs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::costs::sigmoid;
use crate::error::{Error, Result};
use crate::scenario::{AgentState, PredictionSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrustMheConfig {
    pub enabled: bool,
    /// Estimation horizon in prediction ticks.
    pub t_est: usize,
    pub beta_est: f64,
    /// Scale of the error inside the sigmoid, 1/m.
    pub alpha: f64,
    /// Keep the `1 / K` factor of the averaged error.
    pub divide_by_modes: bool,
}

impl Default for TrustMheConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            t_est: 5,
            beta_est: 0.25,
            alpha: 1.0,
            divide_by_modes: true,
        }
    }
}

impl TrustMheConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_est < 1 {
            return Err(Error::config("trustmhe.t_est", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.beta_est) {
            return Err(Error::config("trustmhe.beta_est", "must be in [0, 1)"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("trustmhe.alpha", "must be > 0"));
        }
        Ok(())
    }
}

/// Confidence-weighted average displacement error of one prediction batch.
///
/// `measurements[j]` holds the agent states `j + 1` prediction steps after
/// the batch was generated; only the first `t_est` snapshots are used.
/// Agents missing from any snapshot are dropped. Returns `None` when no
/// agent is left.
pub fn weighted_ade(
    predictions: &[PredictionSet],
    measurements: &[Vec<AgentState>],
    t_est: usize,
    strict: bool,
) -> Option<f64> {
    if measurements.len() < t_est || t_est == 0 {
        return None;
    }
    let window = &measurements[..t_est];
    let mut total = 0.0;
    let mut agents = 0usize;
    'agents: for set in predictions {
        if set.horizon() < t_est || set.modalities.is_empty() {
            continue;
        }
        let mut measured = Vec::with_capacity(t_est);
        for snapshot in window {
            match snapshot.iter().find(|a| a.agent_id == set.agent_id) {
                Some(a) => measured.push([a.x, a.y]),
                None => continue 'agents,
            }
        }
        let c_total: f64 = set.modalities.iter().map(|m| m.confidence).sum();
        let k = set.modalities.len() as f64;
        let mut agent_sum = 0.0;
        for m in &set.modalities {
            let c = if c_total > 0.0 {
                m.confidence / c_total
            } else {
                1.0 / k
            };
            let mut err = 0.0;
            for (p, z) in m.points.iter().zip(&measured) {
                err += (p.mean_x - z[0]).hypot(p.mean_y - z[1]);
            }
            agent_sum += c / t_est as f64 * err;
        }
        total += if strict { agent_sum / k } else { agent_sum };
        agents += 1;
    }
    (agents > 0).then(|| total / agents as f64)
}

/// Momentum update of the reliability with `2 sig(-alpha d)`.
pub fn update_reliability(omega: f64, d: f64, beta_est: f64, alpha: f64) -> f64 {
    let gamma = 2.0 * sigmoid(-alpha * d);
    (beta_est * omega + (1.0 - beta_est) * gamma).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimate {
    /// Not enough history yet.
    Warmup,
    /// No predicted agent was observed over the whole window.
    NoEvidence,
    Error(f64),
}

impl Estimate {
    pub fn error(&self) -> Option<f64> {
        match self {
            Estimate::Error(d) => Some(*d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReliabilityState {
    pub config: TrustMheConfig,
    omega: f64,
    /// `(prediction tick, batch)`, oldest first.
    predictions: VecDeque<(u64, Vec<PredictionSet>)>,
    measurements: VecDeque<(u64, Vec<AgentState>)>,
}

impl ReliabilityState {
    pub fn new(config: TrustMheConfig) -> Self {
        let cap = config.t_est + 1;
        Self {
            config,
            omega: 1.0,
            predictions: VecDeque::with_capacity(cap),
            measurements: VecDeque::with_capacity(cap),
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn buffered(&self) -> (usize, usize) {
        (self.predictions.len(), self.measurements.len())
    }

    /// Feeds the snapshot measured at prediction tick `tick` and the batch
    /// generated at the same tick. Updates `omega` when the batch from
    /// `tick - t_est` is available.
    pub fn tick(
        &mut self,
        tick: u64,
        measured: Vec<AgentState>,
        predictions: Vec<PredictionSet>,
    ) -> Estimate {
        let cap = self.config.t_est + 1;
        push_capped(&mut self.measurements, (tick, measured), cap);
        let t_est = self.config.t_est as u64;
        let estimate = match tick.checked_sub(t_est) {
            None => Estimate::Warmup,
            Some(origin) => match self.predictions.iter().find(|(g, _)| *g == origin) {
                None => Estimate::Warmup,
                Some((_, batch)) => {
                    let window: Vec<Vec<AgentState>> = (origin + 1..=tick)
                        .map(|g| {
                            self.measurements
                                .iter()
                                .find(|(m, _)| *m == g)
                                .map(|(_, s)| s.clone())
                                .unwrap_or_default()
                        })
                        .collect();
                    match weighted_ade(
                        batch,
                        &window,
                        self.config.t_est,
                        self.config.divide_by_modes,
                    ) {
                        Some(d) => Estimate::Error(d),
                        None => Estimate::NoEvidence,
                    }
                }
            },
        };
        if let Estimate::Error(d) = estimate {
            self.omega = update_reliability(self.omega, d, self.config.beta_est, self.config.alpha);
        }
        push_capped(&mut self.predictions, (tick, predictions), cap);
        estimate
    }
}

fn push_capped<T>(buf: &mut VecDeque<T>, item: T, cap: usize) {
    while buf.len() >= cap {
        buf.pop_front();
    }
    buf.push_back(item);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Pose, PredictionPoint, TrajectoryModality};

    fn agent(id: u32, x: f64, y: f64) -> AgentState {
        AgentState {
            agent_id: id,
            x,
            y,
            yaw: 0.0,
            speed: 0.0,
            yaw_rate: 0.0,
            width: 1.9,
            length: 4.5,
        }
    }

    fn modality(points: &[(f64, f64)], confidence: f64) -> TrajectoryModality {
        TrajectoryModality {
            points: points
                .iter()
                .map(|&(x, y)| PredictionPoint {
                    mean_x: x,
                    mean_y: y,
                    sigma_x: 0.1,
                    sigma_y: 0.1,
                    rho: 0.0,
                    yaw: 0.0,
                })
                .collect(),
            confidence,
        }
    }

    fn set(id: u32, modalities: Vec<TrajectoryModality>) -> PredictionSet {
        PredictionSet {
            agent_id: id,
            generated_at: 0,
            step_dt: 0.25,
            origin: Pose::default(),
            width: 1.9,
            length: 4.5,
            modalities,
        }
    }

    #[test]
    fn hand_enumerated_example() {
        // measured at (0, 0); modality errors 1, 1 and 2, 2
        let p = set(
            1,
            vec![
                modality(&[(1.0, 0.0), (0.0, 1.0)], 0.6),
                modality(&[(2.0, 0.0), (0.0, -2.0)], 0.4),
            ],
        );
        let m = vec![vec![agent(1, 0.0, 0.0)], vec![agent(1, 0.0, 0.0)]];
        assert_eq!(weighted_ade(&[p], &m, 2, true), Some(0.7));
    }

    #[test]
    fn perfect_predictions_give_zero() {
        let p = set(3, vec![modality(&[(1.0, 2.0), (2.0, 2.0)], 1.0)]);
        let m = vec![vec![agent(3, 1.0, 2.0)], vec![agent(3, 2.0, 2.0)]];
        assert_eq!(weighted_ade(&[p], &m, 2, true), Some(0.0));
    }

    #[test]
    fn confidence_scale_does_not_matter() {
        let m = vec![vec![agent(1, 0.0, 0.0)], vec![agent(1, 0.0, 0.0)]];
        let a = set(
            1,
            vec![
                modality(&[(1.0, 0.0), (0.0, 3.0)], 0.3),
                modality(&[(2.0, 0.0), (5.0, 0.0)], 0.7),
            ],
        );
        let mut b = a.clone();
        for m in &mut b.modalities {
            m.confidence *= 2.0;
        }
        assert_eq!(
            weighted_ade(&[a], &m, 2, true),
            weighted_ade(&[b], &m, 2, true)
        );
    }

    #[test]
    fn relaxed_mode_drops_modality_factor() {
        let p = set(
            1,
            vec![modality(&[(1.0, 0.0)], 0.5), modality(&[(1.0, 0.0)], 0.5)],
        );
        let m = vec![vec![agent(1, 0.0, 0.0)]];
        assert_eq!(weighted_ade(&[p.clone()], &m, 1, true), Some(0.5));
        assert_eq!(weighted_ade(&[p], &m, 1, false), Some(1.0));
    }

    #[test]
    fn missing_agents_are_excluded() {
        let a = set(1, vec![modality(&[(1.0, 0.0), (1.0, 0.0)], 1.0)]);
        let b = set(2, vec![modality(&[(9.0, 0.0), (9.0, 0.0)], 1.0)]);
        let m = vec![
            vec![agent(1, 0.0, 0.0), agent(2, 0.0, 0.0)],
            vec![agent(1, 0.0, 0.0)],
        ];
        assert_eq!(weighted_ade(&[a, b.clone()], &m, 2, true), Some(1.0));
        assert_eq!(weighted_ade(&[b], &m, 2, true), None);
        assert_eq!(weighted_ade(&[], &m, 2, true), None);
    }

    #[test]
    fn reliability_examples() {
        assert_eq!(update_reliability(1.0, 0.0, 0.25, 1.0), 1.0);
        let w = update_reliability(1.0, 10.0, 0.25, 1.0);
        assert!((w - 0.250_068_096_803_053_65).abs() < 1e-15);
        assert!((2.0 * sigmoid(-10.0) - 9.079_573_740_486_878_9e-5).abs() < 1e-18);
        assert_eq!(
            update_reliability(0.3, 50.0, 0.0, 1.0),
            2.0 * sigmoid(-50.0)
        );
    }

    #[test]
    fn warmup_then_update() {
        let cfg = TrustMheConfig {
            t_est: 3,
            ..TrustMheConfig::default()
        };
        let mut st = ReliabilityState::new(cfg);
        let bad = |x| vec![set(1, vec![modality(&[(x + 100.0, 0.0); 5], 1.0)])];
        for tick in 0..3u64 {
            assert_eq!(
                st.tick(tick, vec![agent(1, tick as f64, 0.0)], bad(tick as f64)),
                Estimate::Warmup
            );
            assert_eq!(st.omega(), 1.0);
        }
        let e = st.tick(3, vec![agent(1, 3.0, 0.0)], bad(3.0));
        assert!(matches!(e, Estimate::Error(d) if d > 90.0));
        assert!(st.omega() < 0.26);
        let (p, m) = st.buffered();
        assert!(p <= 4 && m <= 4);
    }

    #[test]
    fn single_step_horizon_compares_one_lookback() {
        let mut st = ReliabilityState::new(TrustMheConfig {
            t_est: 1,
            ..TrustMheConfig::default()
        });
        let pred = vec![set(1, vec![modality(&[(1.0, 0.0), (50.0, 0.0)], 1.0)])];
        assert_eq!(
            st.tick(0, vec![agent(1, 0.0, 0.0)], pred.clone()),
            Estimate::Warmup
        );
        assert_eq!(
            st.tick(1, vec![agent(1, 1.0, 0.0)], pred),
            Estimate::Error(0.0)
        );
        assert_eq!(st.buffered(), (2, 2));
    }

    #[test]
    fn no_evidence_keeps_omega() {
        let mut st = ReliabilityState::new(TrustMheConfig {
            t_est: 1,
            ..TrustMheConfig::default()
        });
        st.tick(0, vec![], vec![set(4, vec![modality(&[(1.0, 0.0)], 1.0)])]);
        assert_eq!(st.tick(1, vec![], vec![]), Estimate::NoEvidence);
        assert_eq!(st.omega(), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn omega_stays_in_unit_interval(
                start in 0.0f64..=1.0,
                beta in 0.0f64..1.0,
                alpha in 1e-3f64..1e3,
                ds in proptest::collection::vec(0.0f64..1e6, 1..50),
            ) {
                let mut w = start;
                for d in ds {
                    w = update_reliability(w, d, beta, alpha);
                    prop_assert!((0.0..=1.0).contains(&w));
                }
            }

            #[test]
            fn monotone_in_error(w in 0.0f64..=1.0, d in 0.0f64..100.0, gap in 0.0f64..10.0) {
                prop_assert!(update_reliability(w, d + gap, 0.25, 1.0) <= update_reliability(w, d, 0.25, 1.0));
            }

            #[test]
            fn error_scales_linearly(scale in 0.125f64..8.0, e1 in 0.0f64..5.0, e2 in 0.0f64..5.0) {
                let p = set(1, vec![modality(&[(e1, 0.0), (0.0, e2)], 0.5), modality(&[(0.0, e2), (e1, 0.0)], 0.5)]);
                let q = set(1, vec![modality(&[(e1 * scale, 0.0), (0.0, e2 * scale)], 0.5), modality(&[(0.0, e2 * scale), (e1 * scale, 0.0)], 0.5)]);
                let m = vec![vec![agent(1, 0.0, 0.0)], vec![agent(1, 0.0, 0.0)]];
                let a = weighted_ade(&[p], &m, 2, true).unwrap();
                let b = weighted_ade(&[q], &m, 2, true).unwrap();
                prop_assert!((b - scale * a).abs() < 1e-9 * (1.0 + b));
                prop_assert!(a >= 0.0);
            }
        }
    }
}
