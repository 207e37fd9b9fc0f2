//! Model predictive path integral control.
//!
//! Each tick samples `K` Gaussian perturbations of the nominal input
//! sequence, rolls them out through the vehicle model, weights them by
//! `exp(-(S_k - min S) / lambda)` and moves the nominal along the weighted
//! mean perturbation, filtered by a momentum term.

use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{rollout_into, VehicleParams};
use crate::error::{Error, Result};
use crate::scenario::{ControlInput, EgoState};

/// Total cost of one rollout; `states[t]` is reached by applying `inputs[t]`.
pub trait RolloutCost: Sync {
    fn rollout_cost(&self, states: &[EgoState], inputs: &[ControlInput]) -> f64;
}

impl<F> RolloutCost for F
where
    F: Fn(&[EgoState], &[ControlInput]) -> f64 + Sync,
{
    fn rollout_cost(&self, states: &[EgoState], inputs: &[ControlInput]) -> f64 {
        self(states, inputs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub rollouts: usize,
    pub horizon: usize,
    /// Planner step, s.
    pub dt: f64,
    pub inverse_temperature: f64,
    pub momentum: f64,
    /// Noise std on the steering-rate channel, rad/s.
    pub sigma_pla: f64,
    /// Noise std on the acceleration channel, m/s^2.
    pub sigma_accel: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            rollouts: 200,
            horizon: 50,
            dt: 0.1,
            inverse_temperature: 0.02,
            momentum: 0.75,
            sigma_pla: 0.1,
            sigma_accel: 1.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rollouts < 2 {
            return Err(Error::config("planner.rollouts", "must be >= 2"));
        }
        if self.horizon < 1 {
            return Err(Error::config("planner.horizon", "must be >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("planner.dt", "must be > 0"));
        }
        if !(self.inverse_temperature > 0.0) {
            return Err(Error::config("planner.inverse_temperature", "must be > 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("planner.momentum", "must be in [0, 1)"));
        }
        if !(self.sigma_pla > 0.0) {
            return Err(Error::config("planner.sigma_pla", "must be > 0"));
        }
        if !(self.sigma_accel > 0.0) {
            return Err(Error::config("planner.sigma_accel", "must be > 0"));
        }
        Ok(())
    }

    pub fn horizon_s(&self) -> f64 {
        self.horizon as f64 * self.dt
    }
}

/// `k` sequences of `t` perturbations; sequence 0 is all zeros.
pub fn sample_perturbations<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    t: usize,
    sigma: ControlInput,
) -> Vec<Vec<ControlInput>> {
    let mut out = Vec::with_capacity(k);
    if k > 0 {
        out.push(vec![ControlInput::ZERO; t]);
    }
    for _ in 1..k {
        out.push(
            (0..t)
                .map(|_| {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    ControlInput::new(a * sigma.steer_rate, b * sigma.accel)
                })
                .collect(),
        );
    }
    out
}

/// Unnormalised importance weights, shifted by the minimum cost.
pub fn weights(costs: &[f64], inverse_temperature: f64) -> Vec<f64> {
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    costs
        .iter()
        .map(|&s| {
            if s.is_finite() {
                (-(s - min) / inverse_temperature).exp()
            } else {
                0.0
            }
        })
        .collect()
}

pub fn normalize(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        warn!("all rollout weights vanished; using uniform weights");
        return vec![1.0 / weights.len() as f64; weights.len()];
    }
    weights.iter().map(|w| w / total).collect()
}

/// Weighted mean of the perturbation sequences.
pub fn weighted_update(perturbations: &[Vec<ControlInput>], weights: &[f64]) -> Vec<ControlInput> {
    let w = normalize(weights);
    let horizon = perturbations.first().map_or(0, Vec::len);
    let mut out = vec![ControlInput::ZERO; horizon];
    for (seq, wk) in perturbations.iter().zip(&w) {
        if *wk == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(seq) {
            *o = *o + *v * *wk;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutput {
    pub states: Vec<EgoState>,
    pub inputs: Vec<ControlInput>,
    /// Cost of the returned input sequence.
    pub cost: f64,
    /// Lowest cost among the sampled rollouts.
    pub best_sample_cost: f64,
}

#[derive(Debug, Clone)]
pub struct Planner {
    pub config: PlannerConfig,
    pub vehicle: VehicleParams,
    nominal: Vec<ControlInput>,
    direction: Vec<ControlInput>,
}

impl Planner {
    pub fn new(config: PlannerConfig, vehicle: VehicleParams) -> Self {
        Self {
            nominal: vec![ControlInput::ZERO; config.horizon],
            direction: vec![ControlInput::ZERO; config.horizon],
            config,
            vehicle,
        }
    }

    pub fn nominal(&self) -> &[ControlInput] {
        &self.nominal
    }

    pub fn set_nominal(&mut self, inputs: Vec<ControlInput>) {
        assert_eq!(inputs.len(), self.config.horizon);
        self.nominal = inputs;
    }

    /// Receding-horizon warm start: drop the first input, repeat the last.
    pub fn shift(&mut self) {
        for seq in [&mut self.nominal, &mut self.direction] {
            if let Some(&last) = seq.last() {
                seq.rotate_left(1);
                *seq.last_mut().unwrap() = last;
            }
        }
    }

    /// One sample, weight and update cycle from `state0`.
    pub fn plan<C: RolloutCost, R: Rng + ?Sized>(
        &mut self,
        state0: &EgoState,
        cost: &C,
        rng: &mut R,
    ) -> PlanOutput {
        let cfg = self.config;
        let (k, horizon) = (cfg.rollouts, cfg.horizon);
        let sigma = ControlInput::new(cfg.sigma_pla, cfg.sigma_accel);
        let noise = sample_perturbations(rng, k, horizon, sigma);
        let vehicle = self.vehicle;
        let nominal = &self.nominal;

        // clamp each candidate and keep the perturbation actually applied
        let candidates: Vec<Vec<ControlInput>> = noise
            .iter()
            .map(|seq| {
                nominal
                    .iter()
                    .zip(seq)
                    .map(|(u, v)| vehicle.clamp_input(*u + *v))
                    .collect()
            })
            .collect();
        let costs: Vec<f64> = candidates
            .par_iter()
            .map_init(
                || Vec::with_capacity(horizon),
                |states, inputs| {
                    rollout_into(state0, inputs, &vehicle, cfg.dt, states);
                    let c = cost.rollout_cost(states, inputs);
                    if c.is_nan() {
                        f64::INFINITY
                    } else {
                        c
                    }
                },
            )
            .collect();
        let effective: Vec<Vec<ControlInput>> = candidates
            .iter()
            .map(|seq| seq.iter().zip(nominal).map(|(c, u)| *c - *u).collect())
            .collect();

        let w = weights(&costs, cfg.inverse_temperature);
        let delta = weighted_update(&effective, &w);
        let beta = cfg.momentum;
        let mut updated: Vec<ControlInput> = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let dir = self.direction[t] * beta + delta[t] * (1.0 - beta);
            updated.push(vehicle.clamp_input(self.nominal[t] + dir));
        }
        let mut states = Vec::with_capacity(horizon);
        rollout_into(state0, &updated, &vehicle, cfg.dt, &mut states);
        let mut new_cost = cost.rollout_cost(&states, &updated);

        let (best, best_cost) = costs.iter().enumerate().fold(
            (0, f64::INFINITY),
            |acc, (i, &c)| if c < acc.1 { (i, c) } else { acc },
        );
        if !(new_cost <= best_cost) {
            updated = candidates[best].clone();
            rollout_into(state0, &updated, &vehicle, cfg.dt, &mut states);
            new_cost = best_cost;
        }
        for t in 0..horizon {
            self.direction[t] = updated[t] - self.nominal[t];
        }
        self.nominal = updated.clone();
        PlanOutput {
            states,
            inputs: updated,
            cost: new_cost,
            best_sample_cost: best_cost,
        }
    }
}
