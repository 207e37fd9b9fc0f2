//! Pure-pursuit steering and proportional speed control along the latest plan.

use serde::{Deserialize, Serialize};

use crate::dynamics::VehicleParams;
use crate::error::{Error, Result};
use crate::scenario::{wrap_angle, ControlInput, EgoState, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerParams {
    /// Look-ahead along the plan, s.
    pub lookahead_time: f64,
    /// Lower bound on the look-ahead distance, m.
    pub min_lookahead: f64,
    /// Steering-angle error gain, 1/s.
    pub steer_gain: f64,
    /// Speed error gain, 1/s.
    pub speed_gain: f64,
    /// Plans older than this many replan intervals trigger braking.
    pub stale_intervals: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        Self {
            lookahead_time: 0.5,
            min_lookahead: 2.0,
            steer_gain: 5.0,
            speed_gain: 2.0,
            stale_intervals: 2.0,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("lookahead_time", self.lookahead_time),
            ("min_lookahead", self.min_lookahead),
            ("steer_gain", self.steer_gain),
            ("speed_gain", self.speed_gain),
            ("stale_intervals", self.stale_intervals),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("tracker.{name}"), "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Planned trajectory anchored in simulation time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedPlan {
    /// Time of `start`, s.
    pub t0: f64,
    pub dt: f64,
    pub start: EgoState,
    /// `states[i]` is reached at `t0 + (i + 1) * dt`.
    pub states: Vec<EgoState>,
    pub inputs: Vec<ControlInput>,
}

impl TimedPlan {
    pub fn state_at(&self, t: f64) -> EgoState {
        let f = (t - self.t0) / self.dt;
        if f <= 0.0 || self.states.is_empty() {
            return self.start;
        }
        let i = f.floor() as usize;
        if i >= self.states.len() {
            return self.states[self.states.len() - 1];
        }
        let a = if i == 0 {
            self.start
        } else {
            self.states[i - 1]
        };
        let b = self.states[i];
        let frac = f - i as f64;
        let pose = Pose::new(a.x, a.y, a.yaw).lerp(&Pose::new(b.x, b.y, b.yaw), frac);
        EgoState {
            x: pose.x,
            y: pose.y,
            steer: a.steer + (b.steer - a.steer) * frac,
            speed: a.speed + (b.speed - a.speed) * frac,
            yaw: pose.yaw,
        }
    }

    pub fn input_at(&self, t: f64) -> ControlInput {
        let f = ((t - self.t0) / self.dt).max(0.0);
        let i = (f.floor() as usize).min(self.inputs.len().saturating_sub(1));
        self.inputs.get(i).copied().unwrap_or(ControlInput::ZERO)
    }
}

/// Input that follows `plan` at time `t`. `stale_after` is the plan age, s,
/// beyond which the vehicle brakes at full deceleration.
pub fn track(
    ego: &EgoState,
    plan: &TimedPlan,
    t: f64,
    vehicle: &VehicleParams,
    params: &TrackerParams,
    stale_after: f64,
) -> ControlInput {
    if t - plan.t0 > stale_after + 1e-9 {
        return ControlInput::new(0.0, -vehicle.max_accel);
    }
    let reference = plan.state_at(t);
    let target = plan.state_at(t + params.lookahead_time);
    let (dx, dy) = (target.x - ego.x, target.y - ego.y);
    let (sin, cos) = ego.yaw.sin_cos();
    let lateral = -sin * dx + cos * dy;
    let ld = dx.hypot(dy).max(params.min_lookahead);
    let mut steer_des = (vehicle.wheelbase * 2.0 * lateral / (ld * ld)).atan();
    // heading error matters when the look-ahead point is degenerate
    if dx.hypot(dy) < 1e-6 {
        steer_des = wrap_angle(target.yaw - ego.yaw).clamp(-vehicle.max_steer, vehicle.max_steer);
    }
    let steer_des = steer_des.clamp(-vehicle.max_steer, vehicle.max_steer);
    let u = ControlInput::new(
        params.steer_gain * (steer_des - ego.steer),
        plan.input_at(t).accel + params.speed_gain * (reference.speed - ego.speed),
    );
    vehicle.clamp_input(u)
}
