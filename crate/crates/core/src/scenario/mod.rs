//! Domain types shared across the planner, predictors, estimator and the
//! simulation loop.
//!
//! Sign conventions used everywhere in the crate:
//! * yaw is measured counter-clockwise from +x and kept in `[-pi, pi)`;
//! * lateral offsets are positive to the **left** of the direction of travel.

mod builtin;
mod route;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub use builtin::{builtin_scenario, BUILTIN_SCENARIOS};
pub use route::{LateralBounds, PathBuilder, Polyline, Projection, Route, RouteSpec};

/// Wraps an angle into the half-open interval `[-pi, pi)`.
///
/// Values already inside the interval are returned unchanged, which makes the
/// function exactly idempotent.
pub fn wrap_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let two_pi = 2.0 * PI;
    let mut r = (theta + PI).rem_euclid(two_pi) - PI;
    // rem_euclid may round up to exactly 2*pi
    if r >= PI {
        r -= two_pi;
    }
    if r < -PI {
        r = -PI;
    }
    r
}

/// Input of the kinematic single-track model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlInput {
    /// Steering angle rate, rad/s.
    pub steer_rate: f64,
    /// Longitudinal acceleration, m/s^2.
    pub accel: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput {
        steer_rate: 0.0,
        accel: 0.0,
    };

    pub fn new(steer_rate: f64, accel: f64) -> Self {
        Self { steer_rate, accel }
    }

    pub fn is_finite(&self) -> bool {
        self.steer_rate.is_finite() && self.accel.is_finite()
    }
}

impl std::ops::Add for ControlInput {
    type Output = ControlInput;
    fn add(self, rhs: Self) -> Self {
        ControlInput::new(self.steer_rate + rhs.steer_rate, self.accel + rhs.accel)
    }
}

impl std::ops::Sub for ControlInput {
    type Output = ControlInput;
    fn sub(self, rhs: Self) -> Self {
        ControlInput::new(self.steer_rate - rhs.steer_rate, self.accel - rhs.accel)
    }
}

impl std::ops::Mul<f64> for ControlInput {
    type Output = ControlInput;
    fn mul(self, k: f64) -> Self {
        ControlInput::new(self.steer_rate * k, self.accel * k)
    }
}

/// Ego vehicle state `[x, y, steer, speed, yaw]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoState {
    pub x: f64,
    pub y: f64,
    pub steer: f64,
    pub speed: f64,
    pub yaw: f64,
}

impl EgoState {
    pub fn new(x: f64, y: f64, steer: f64, speed: f64, yaw: f64) -> Self {
        Self {
            x,
            y,
            steer,
            speed,
            yaw,
        }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.steer, self.speed, self.yaw]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Measured state of a traffic participant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub agent_id: u32,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub speed: f64,
    /// Yaw rate, rad/s. Only the constant-turn-rate fallback reads it.
    #[serde(default)]
    pub yaw_rate: f64,
    pub width: f64,
    pub length: f64,
}

impl AgentState {
    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.yaw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Self { x, y, yaw }
    }

    /// Linear interpolation with shortest-arc yaw blending.
    pub fn lerp(&self, other: &Pose, frac: f64) -> Pose {
        let dyaw = wrap_angle(other.yaw - self.yaw);
        Pose {
            x: self.x + (other.x - self.x) * frac,
            y: self.y + (other.y - self.y) * frac,
            yaw: wrap_angle(self.yaw + dyaw * frac),
        }
    }
}

/// One bivariate Gaussian component of a predicted trajectory at a time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionPoint {
    pub mean_x: f64,
    pub mean_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rho: f64,
    pub yaw: f64,
}

impl PredictionPoint {
    pub fn pose(&self) -> Pose {
        Pose::new(self.mean_x, self.mean_y, self.yaw)
    }

    pub fn is_valid(&self) -> bool {
        self.sigma_x > 0.0
            && self.sigma_y > 0.0
            && self.rho.abs() < 1.0
            && self.mean_x.is_finite()
            && self.mean_y.is_finite()
            && self.yaw.is_finite()
    }
}

/// A single predicted future of an agent with its confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryModality {
    /// Point `i` describes the agent `(i + 1) * step_dt` seconds after the
    /// prediction was generated.
    pub points: Vec<PredictionPoint>,
    pub confidence: f64,
}

/// All modalities predicted for one agent at one prediction tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub agent_id: u32,
    /// Simulation step (base tick) at which the prediction was generated.
    pub generated_at: u64,
    /// Time between consecutive prediction points, s.
    pub step_dt: f64,
    /// Agent pose at generation time; offset 0 of every modality.
    pub origin: Pose,
    pub width: f64,
    pub length: f64,
    pub modalities: Vec<TrajectoryModality>,
}

impl PredictionSet {
    pub fn horizon(&self) -> usize {
        self.modalities.first().map_or(0, |m| m.points.len())
    }

    /// Rescales the confidences so they sum to one. A set whose confidences
    /// are all zero gets uniform confidences.
    pub fn normalize_confidences(&mut self) {
        let total: f64 = self.modalities.iter().map(|m| m.confidence).sum();
        let k = self.modalities.len() as f64;
        for m in &mut self.modalities {
            m.confidence = if total > 0.0 {
                m.confidence / total
            } else {
                1.0 / k
            };
        }
    }

    /// Pose of `modality` at `offset` seconds after generation.
    ///
    /// Offsets that fall on the prediction grid return the stored point
    /// exactly; offsets in between are linearly interpolated. Beyond the last
    /// point the final pose is held.
    pub fn pose_at(&self, modality: usize, offset: f64) -> Pose {
        let points = &self.modalities[modality].points;
        if points.is_empty() || offset <= 0.0 {
            return self.origin;
        }
        let f = offset / self.step_dt;
        let nearest = f.round();
        if (f - nearest).abs() < 1e-9 {
            let idx = nearest as usize;
            return if idx == 0 {
                self.origin
            } else if idx <= points.len() {
                points[idx - 1].pose()
            } else {
                points[points.len() - 1].pose()
            };
        }
        let lo = f.floor() as usize;
        if lo >= points.len() {
            return points[points.len() - 1].pose();
        }
        let frac = f - lo as f64;
        let a = if lo == 0 {
            self.origin
        } else {
            points[lo - 1].pose()
        };
        a.lerp(&points[lo].pose(), frac)
    }

    pub fn validate(&self) -> Result<()> {
        let total: f64 = self.modalities.iter().map(|m| m.confidence).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Contract(format!(
                "agent {} confidences sum to {total}",
                self.agent_id
            )));
        }
        for m in &self.modalities {
            if !(0.0..=1.0).contains(&m.confidence) {
                return Err(Error::Contract(format!(
                    "agent {} confidence {} outside [0, 1]",
                    self.agent_id, m.confidence
                )));
            }
            if !m.points.iter().all(PredictionPoint::is_valid) {
                return Err(Error::Contract(format!(
                    "agent {} has an invalid Gaussian component",
                    self.agent_id
                )));
            }
        }
        Ok(())
    }
}

/// Intelligent-driver style longitudinal parameters of a scripted agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongitudinalParams {
    /// Standstill gap to the leader, m.
    pub desired_gap: f64,
    pub max_accel: f64,
    pub max_decel: f64,
}

impl Default for LongitudinalParams {
    fn default() -> Self {
        Self {
            desired_gap: 2.0,
            max_accel: 1.5,
            max_decel: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentBehavior {
    /// Follows `path` at `desired_speed`, keeping a gap to agents ahead that
    /// share the same `lane`.
    RouteFollower {
        path: Vec<[f64; 2]>,
        desired_speed: f64,
        initial_speed: f64,
        #[serde(default)]
        start_offset: f64,
        #[serde(default)]
        lane: u32,
        #[serde(default)]
        longitudinal: LongitudinalParams,
    },
    /// Timed waypoints `[t, x, y]`, linearly interpolated.
    Waypoints { points: Vec<[f64; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentScript {
    pub agent_id: u32,
    #[serde(default)]
    pub spawn_time: f64,
    pub width: f64,
    pub length: f64,
    pub behavior: AgentBehavior,
}

/// Per-seed randomisation of the scripted traffic.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficJitter {
    /// Spawn times are shifted uniformly within `+-spawn_time`, s.
    pub spawn_time: f64,
    /// Desired speeds are scaled uniformly within `1 +- speed_frac`.
    pub speed_frac: f64,
}

pub const MIN_AGENT_SPEED: f64 = 4.0;
pub const MAX_AGENT_SPEED: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub route: RouteSpec,
    pub ego_spawn: EgoState,
    #[serde(default)]
    pub agents: Vec<AgentScript>,
    /// Scenario length, s.
    pub duration: f64,
    /// Upper bound on the ego's desired speed, m/s.
    pub desired_speed: f64,
    #[serde(default = "default_attention_radius")]
    pub attention_radius: f64,
    /// Distance threshold of the closeness penalty in the traffic cost, m.
    #[serde(default = "default_distance_threshold")]
    pub distance_threshold: f64,
    /// Longitudinal inflation of the ego box at each end, m.
    #[serde(default = "default_safety_margin")]
    pub safety_margin: f64,
    #[serde(default = "default_lateral_accel")]
    pub lateral_accel_limit: f64,
    #[serde(default)]
    pub traffic_jitter: TrafficJitter,
}

fn default_attention_radius() -> f64 {
    50.0
}
fn default_distance_threshold() -> f64 {
    10.0
}
fn default_safety_margin() -> f64 {
    0.125
}
fn default_lateral_accel() -> f64 {
    4.0
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("scenario.{f}");
        if !(self.duration > 0.0) {
            return Err(Error::config(field("duration"), "must be > 0"));
        }
        if !(self.attention_radius > 0.0) {
            return Err(Error::config(field("attention_radius"), "must be > 0"));
        }
        if !(self.safety_margin >= 0.0) {
            return Err(Error::config(field("safety_margin"), "must be >= 0"));
        }
        if !(self.desired_speed > 0.0) {
            return Err(Error::config(field("desired_speed"), "must be > 0"));
        }
        if !self.ego_spawn.is_finite() || self.ego_spawn.speed < 0.0 {
            return Err(Error::config(
                field("ego_spawn"),
                "must be finite with speed >= 0",
            ));
        }
        let mut ids: Vec<u32> = self.agents.iter().map(|a| a.agent_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config(field("agents"), "agent ids must be unique"));
        }
        for agent in &self.agents {
            if !(agent.width > 0.0 && agent.length > 0.0) {
                return Err(Error::config(
                    field("agents"),
                    format!("agent {} needs positive width and length", agent.agent_id),
                ));
            }
            if let AgentBehavior::RouteFollower {
                desired_speed,
                path,
                ..
            } = &agent.behavior
            {
                if !(MIN_AGENT_SPEED..=MAX_AGENT_SPEED).contains(desired_speed) {
                    return Err(Error::config(
                        field("agents"),
                        format!(
                            "agent {} desired speed {desired_speed} outside [{MIN_AGENT_SPEED}, {MAX_AGENT_SPEED}] m/s",
                            agent.agent_id
                        ),
                    ));
                }
                Polyline::new(path.clone()).map_err(|e| {
                    Error::config(field("agents"), format!("agent {}: {e}", agent.agent_id))
                })?;
            }
        }
        self.route.build()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_examples() {
        assert_eq!(wrap_angle(0.0), 0.0);
        // 6.5 - 2*pi at 50 digits
        assert!((wrap_angle(6.5) - 0.216_814_692_820_413_5).abs() < 1e-14);
        assert_eq!(wrap_angle(-PI), -PI);
        assert_eq!(wrap_angle(PI), -PI);
        assert!((wrap_angle(-7.0) - (-7.0 + 2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn confidence_normalization_keeps_argmax() {
        let point = PredictionPoint {
            mean_x: 0.0,
            mean_y: 0.0,
            sigma_x: 0.1,
            sigma_y: 0.1,
            rho: 0.0,
            yaw: 0.0,
        };
        let mut set = PredictionSet {
            agent_id: 1,
            generated_at: 0,
            step_dt: 0.25,
            origin: Pose::default(),
            width: 2.0,
            length: 4.0,
            modalities: [0.2, 3.0, 1.0]
                .iter()
                .map(|&c| TrajectoryModality {
                    points: vec![point],
                    confidence: c,
                })
                .collect(),
        };
        set.normalize_confidences();
        let c: Vec<f64> = set.modalities.iter().map(|m| m.confidence).collect();
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(c[1] > c[2] && c[2] > c[0]);
        set.validate().unwrap();
    }

    #[test]
    fn pose_at_hits_grid_points_exactly() {
        let pts: Vec<PredictionPoint> = (1..=4)
            .map(|i| PredictionPoint {
                mean_x: i as f64 * 0.1 * 3.0,
                mean_y: 0.0,
                sigma_x: 0.1,
                sigma_y: 0.1,
                rho: 0.0,
                yaw: 0.0,
            })
            .collect();
        let set = PredictionSet {
            agent_id: 3,
            generated_at: 0,
            step_dt: 0.25,
            origin: Pose::default(),
            width: 1.0,
            length: 1.0,
            modalities: vec![TrajectoryModality {
                points: pts.clone(),
                confidence: 1.0,
            }],
        };
        assert_eq!(set.pose_at(0, 0.5).x, pts[1].mean_x);
        assert_eq!(set.pose_at(0, 0.0).x, 0.0);
        assert!((set.pose_at(0, 0.125).x - 0.15).abs() < 1e-12);
        assert_eq!(set.pose_at(0, 10.0).x, pts[3].mean_x);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn wrap_is_idempotent_and_in_range(theta in -1e6f64..1e6) {
                let w = wrap_angle(theta);
                prop_assert!((-PI..PI).contains(&w));
                prop_assert_eq!(wrap_angle(w), w);
                let k = ((theta - w) / (2.0 * PI)).round();
                prop_assert!((theta - w - k * 2.0 * PI).abs() < 1e-9 * theta.abs().max(1.0));
            }
        }
    }
}
