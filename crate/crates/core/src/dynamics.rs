//! Discrete-time kinematic single-track model.
//!
//! Forward-Euler integration of
//! `x' = v cos(yaw)`, `y' = v sin(yaw)`, `steer' = steer_rate`, `v' = accel`,
//! `yaw' = v / wheelbase * tan(steer)`.
//! Inputs are clamped to their limits before integration; steering and speed
//! are clamped afterwards, so the map is total for any finite input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{wrap_angle, ControlInput, EgoState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub max_steer_rate: f64,
    pub max_accel: f64,
    pub max_steer: f64,
    pub max_speed: f64,
    pub width: f64,
    pub length: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            wheelbase: 2.5,
            max_steer_rate: 0.4,
            max_accel: 4.0,
            max_steer: 0.6,
            max_speed: 30.0,
            width: 1.9,
            length: 4.5,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("wheelbase", self.wheelbase),
            ("max_steer_rate", self.max_steer_rate),
            ("max_accel", self.max_accel),
            ("max_steer", self.max_steer),
            ("max_speed", self.max_speed),
            ("width", self.width),
            ("length", self.length),
        ];
        for (name, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(format!("vehicle.{name}"), "must be positive"));
            }
        }
        Ok(())
    }

    pub fn clamp_input(&self, u: ControlInput) -> ControlInput {
        ControlInput {
            steer_rate: u
                .steer_rate
                .clamp(-self.max_steer_rate, self.max_steer_rate),
            accel: u.accel.clamp(-self.max_accel, self.max_accel),
        }
    }
}

pub fn step(state: &EgoState, input: ControlInput, params: &VehicleParams, dt: f64) -> EgoState {
    let u = params.clamp_input(input);
    let (sin, cos) = state.yaw.sin_cos();
    EgoState {
        x: state.x + state.speed * cos * dt,
        y: state.y + state.speed * sin * dt,
        steer: (state.steer + u.steer_rate * dt).clamp(-params.max_steer, params.max_steer),
        speed: (state.speed + u.accel * dt).clamp(0.0, params.max_speed),
        yaw: wrap_angle(state.yaw + state.speed / params.wheelbase * state.steer.tan() * dt),
    }
}

/// Element `t` of the result is the state after `t + 1` steps.
pub fn rollout(
    state0: &EgoState,
    inputs: &[ControlInput],
    params: &VehicleParams,
    dt: f64,
) -> Vec<EgoState> {
    let mut out = Vec::with_capacity(inputs.len());
    rollout_into(state0, inputs, params, dt, &mut out);
    out
}

pub fn rollout_into(
    state0: &EgoState,
    inputs: &[ControlInput],
    params: &VehicleParams,
    dt: f64,
    out: &mut Vec<EgoState>,
) {
    out.clear();
    let mut s = *state0;
    for u in inputs {
        s = step(&s, *u, params, dt);
        out.push(s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> VehicleParams {
        VehicleParams::default()
    }

    #[test]
    fn straight_coasting() {
        let s = step(
            &EgoState::new(0.0, 0.0, 0.0, 10.0, 0.0),
            ControlInput::ZERO,
            &params(),
            0.1,
        );
        assert_eq!(s, EgoState::new(1.0, 0.0, 0.0, 10.0, 0.0));
    }

    #[test]
    fn standstill_acceleration_uses_pre_step_speed() {
        let s = step(
            &EgoState::default(),
            ControlInput::new(0.0, 2.0),
            &params(),
            0.1,
        );
        assert!((s.speed - 0.2).abs() < 1e-15);
        assert_eq!(s.x, 0.0);
    }

    #[test]
    fn yaw_update_matches_scalar_oracle() {
        let s = step(
            &EgoState::new(0.0, 0.0, 0.1, 10.0, 0.0),
            ControlInput::ZERO,
            &params(),
            0.1,
        );
        // 0.1 * (10 / 2.5) * tan(0.1) at 50 digits
        assert!((s.yaw - 0.040_133_868_834_180_22).abs() < 1e-15);
    }

    #[test]
    fn rollout_examples() {
        let xs: Vec<f64> = rollout(
            &EgoState::new(0.0, 0.0, 0.0, 10.0, 0.0),
            &[ControlInput::ZERO; 3],
            &params(),
            0.1,
        )
        .iter()
        .map(|s| s.x)
        .collect();
        for (x, want) in xs.iter().zip([1.0, 2.0, 3.0]) {
            assert!((x - want).abs() < 1e-12);
        }
        let vs: Vec<f64> = rollout(
            &EgoState::default(),
            &[ControlInput::new(0.0, 1.0); 2],
            &params(),
            0.1,
        )
        .iter()
        .map(|s| s.speed)
        .collect();
        assert!((vs[0] - 0.1).abs() < 1e-15 && (vs[1] - 0.2).abs() < 1e-15);
    }

    /// Independent scalar re-implementation of the heading recursion.
    #[test]
    fn constant_steer_rate_heading_matches_scalar_iteration() {
        let p = params();
        let (dt, rate, n) = (0.1, 0.05, 40);
        let states = rollout(
            &EgoState::new(0.0, 0.0, 0.0, 8.0, 0.0),
            &vec![ControlInput::new(rate, 0.0); n],
            &p,
            dt,
        );
        let (mut steer, mut yaw) = (0.0f64, 0.0f64);
        for _ in 0..n {
            yaw += 8.0 / 2.5 * steer.tan() * dt;
            steer = (steer + rate * dt).min(0.6);
        }
        let yaw = (yaw + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
            - std::f64::consts::PI;
        assert!((states[n - 1].yaw - yaw).abs() < 1e-9);
    }

    #[test]
    fn inputs_and_states_are_clamped() {
        let p = params();
        let s = step(
            &EgoState::new(0.0, 0.0, 0.59, 29.9, 0.0),
            ControlInput::new(100.0, 100.0),
            &p,
            0.1,
        );
        assert_eq!(s.steer, p.max_steer);
        assert_eq!(s.speed, p.max_speed);
        let s = step(
            &EgoState::new(0.0, 0.0, 0.0, 0.1, 0.0),
            ControlInput::new(0.0, -100.0),
            &p,
            0.1,
        );
        assert_eq!(s.speed, 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn input() -> impl Strategy<Value = ControlInput> {
            (-5.0f64..5.0, -10.0f64..10.0).prop_map(|(a, b)| ControlInput::new(a, b))
        }

        proptest! {
            #[test]
            fn states_stay_within_limits(
                v0 in 0.0f64..30.0,
                steer0 in -0.6f64..0.6,
                inputs in proptest::collection::vec(input(), 1..60),
            ) {
                let p = params();
                for s in rollout(&EgoState::new(0.0, 0.0, steer0, v0, 0.3), &inputs, &p, 0.1) {
                    prop_assert!(s.is_finite());
                    prop_assert!((0.0..=p.max_speed).contains(&s.speed));
                    prop_assert!(s.steer.abs() <= p.max_steer);
                    prop_assert!((-std::f64::consts::PI..std::f64::consts::PI).contains(&s.yaw));
                }
            }

            #[test]
            fn horizon_composition(
                a in proptest::collection::vec(input(), 1..20),
                b in proptest::collection::vec(input(), 1..20),
            ) {
                let p = params();
                let s0 = EgoState::new(1.0, -2.0, 0.1, 7.0, 0.5);
                let joined: Vec<ControlInput> = a.iter().chain(b.iter()).copied().collect();
                let whole = rollout(&s0, &joined, &p, 0.1);
                let first = rollout(&s0, &a, &p, 0.1);
                let second = rollout(first.last().unwrap(), &b, &p, 0.1);
                prop_assert_eq!(&whole[a.len()..], &second[..]);
            }
        }
    }
}
