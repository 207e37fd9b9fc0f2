//! Planner running cost: safety (boundary, traffic, yaw), progress, comfort
//! and normative terms, discounted over the horizon.

mod geometry;
mod penalty;

pub use geometry::{box_distance, OrientedBox};
pub use penalty::{penalty_bnd, penalty_cls, sigmoid, PenaltyParams};

use serde::{Deserialize, Serialize};

use crate::dynamics::VehicleParams;
use crate::error::{Error, Result};
use crate::mppi::RolloutCost;
use crate::scenario::{
    wrap_angle, ControlInput, EgoState, LateralBounds, PredictionSet, Route, ScenarioConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerMode {
    Conservative,
    #[default]
    Balanced,
    Aggressive,
}

impl PlannerMode {
    pub const ALL: [PlannerMode; 3] = [
        PlannerMode::Conservative,
        PlannerMode::Balanced,
        PlannerMode::Aggressive,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerMode::Conservative => "conservative",
            PlannerMode::Balanced => "balanced",
            PlannerMode::Aggressive => "aggressive",
        }
    }
}

impl std::str::FromStr for PlannerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::config("mode", format!("unknown planner mode `{s}`")))
    }
}

impl std::fmt::Display for PlannerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Cost weights. `yaw_rate` and `yaw_sum` are carried for completeness of the
/// weight table but do not enter any cost term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub boundary: f64,
    pub traffic: f64,
    pub yaw: f64,
    pub yaw_rate: f64,
    pub progress: f64,
    pub input: f64,
    pub comfort: f64,
    pub yaw_sum: f64,
    pub offset: f64,
    pub velocity: f64,
    /// Per-step discount rate of the running cost.
    pub decay: f64,
}

impl CostWeights {
    pub fn for_mode(mode: PlannerMode) -> Self {
        let row = match mode {
            PlannerMode::Conservative => [2.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            PlannerMode::Balanced => [2.0, 2.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 2.0],
            PlannerMode::Aggressive => [1.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 2.0],
        };
        Self::from_row(row, 0.05)
    }

    pub fn from_row(r: [f64; 10], decay: f64) -> Self {
        Self {
            boundary: r[0],
            traffic: r[1],
            yaw: r[2],
            yaw_rate: r[3],
            progress: r[4],
            input: r[5],
            comfort: r[6],
            yaw_sum: r[7],
            offset: r[8],
            velocity: r[9],
            decay,
        }
    }

    pub fn zero() -> Self {
        Self::from_row([0.0; 10], 0.05)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.boundary,
            self.traffic,
            self.yaw,
            self.yaw_rate,
            self.progress,
            self.input,
            self.comfort,
            self.yaw_sum,
            self.offset,
            self.velocity,
            self.decay,
        ];
        if all.iter().all(|w| *w >= 0.0 && w.is_finite()) {
            Ok(())
        } else {
            Err(Error::config(
                "planner.weights",
                "weights must be finite and >= 0",
            ))
        }
    }
}

pub fn boundary_cost(d_lat: f64, bounds: LateralBounds, weight: f64, p: &PenaltyParams) -> f64 {
    if weight == 0.0 {
        return 0.0;
    }
    let below = bounds.min - d_lat;
    let above = d_lat - bounds.max;
    weight
        * (penalty_bnd(below, p) + penalty_bnd(above, p) + penalty_cls(below) + penalty_cls(above))
}

pub fn yaw_cost(yaw: f64, yaw_ref: f64, weight: f64) -> f64 {
    let e = wrap_angle(yaw - yaw_ref);
    weight * e * e
}

/// `window_index` is the route index reached inside a window of `window` indices.
pub fn progress_cost(window_index: f64, window: f64, weight: f64) -> f64 {
    weight * (1.0 - window_index / window)
}

pub fn comfort_cost(
    d_lat: f64,
    prev_d_lat: f64,
    input: ControlInput,
    prev_input: ControlInput,
    w: &CostWeights,
) -> f64 {
    let dd = d_lat - prev_d_lat;
    let du = input - prev_input;
    w.comfort * dd * dd + w.input * (du.steer_rate * du.steer_rate + du.accel * du.accel)
}

/// Speed target limited by the lateral acceleration on the local curvature.
pub fn desired_speed(cap: f64, curvature: f64, lateral_accel: f64) -> f64 {
    cap.min((lateral_accel / curvature.abs()).sqrt())
}

pub fn norm_cost(d_lat: f64, speed: f64, v_des: f64, w: &CostWeights, p: &PenaltyParams) -> f64 {
    let dv = speed - v_des;
    w.offset * d_lat * d_lat + w.velocity * (dv * dv + penalty_bnd(-speed, p))
}

pub fn decay_factor(t: usize, decay: f64) -> f64 {
    (-(t as f64) * decay).exp()
}

/// Confidence-weighted penalties of the ego box against agent boxes.
pub fn traffic_cost(
    ego: &OrientedBox,
    agents: &[(OrientedBox, f64)],
    threshold: f64,
    weight: f64,
    p: &PenaltyParams,
) -> f64 {
    let mut sum = 0.0;
    for (b, c) in agents {
        let d = box_distance(ego, b);
        sum += c * (penalty_bnd(-d, p) + penalty_cls(threshold - d));
    }
    weight * sum
}

pub fn blended_traffic_cost(omega: f64, ai: f64, fallback: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::ReliabilityOutOfRange(omega));
    }
    Ok(if omega == 1.0 {
        ai
    } else if omega == 0.0 {
        fallback
    } else {
        omega * ai + (1.0 - omega) * fallback
    })
}

/// Agent boxes per planner step, each weighted by its modality confidence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Occupancy {
    steps: Vec<Vec<(OrientedBox, f64)>>,
}

impl Occupancy {
    /// Samples predictions at the planner grid. Each set comes with the time
    /// from its generation to the start of the plan; step `t` is evaluated
    /// `offset + (t + 1) * dt` after generation. Sets whose agent starts
    /// farther than `radius` from `ego` are skipped.
    pub fn build<'s>(
        sets: impl IntoIterator<Item = (&'s PredictionSet, f64)>,
        ego: [f64; 2],
        radius: f64,
        dt: f64,
        horizon: usize,
    ) -> Self {
        let visible: Vec<(&PredictionSet, f64)> = sets
            .into_iter()
            .filter(|(s, _)| (s.origin.x - ego[0]).hypot(s.origin.y - ego[1]) <= radius)
            .collect();
        let steps = (0..horizon)
            .map(|t| {
                let mut boxes = Vec::new();
                for (s, base) in &visible {
                    let offset = base + (t + 1) as f64 * dt;
                    for (k, m) in s.modalities.iter().enumerate() {
                        let pose = s.pose_at(k, offset);
                        boxes.push((
                            OrientedBox::new(pose.x, pose.y, pose.yaw, s.length, s.width),
                            m.confidence,
                        ));
                    }
                }
                boxes
            })
            .collect();
        Self { steps }
    }

    pub fn step(&self, t: usize) -> &[(OrientedBox, f64)] {
        self.steps.get(t).map_or(&[], Vec::as_slice)
    }

    pub fn horizon(&self) -> usize {
        self.steps.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Traffic {
    /// Predictions of one source only.
    Single(Occupancy),
    /// Reliability-weighted mix of predictor and fallback.
    Blended {
        ai: Occupancy,
        fallback: Occupancy,
        omega: f64,
    },
}

impl Traffic {
    pub fn blended(ai: Occupancy, fallback: Occupancy, omega: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(Error::ReliabilityOutOfRange(omega));
        }
        Ok(Traffic::Blended {
            ai,
            fallback,
            omega,
        })
    }
}

/// Per-run constants of the cost function.
#[derive(Debug, Clone, PartialEq)]
pub struct CostSetup {
    pub weights: CostWeights,
    pub penalty: PenaltyParams,
    pub desired_speed: f64,
    pub lateral_accel_limit: f64,
    pub distance_threshold: f64,
    pub attention_radius: f64,
    pub ego_length: f64,
    pub ego_width: f64,
}

impl CostSetup {
    pub fn new(weights: CostWeights, scenario: &ScenarioConfig, vehicle: &VehicleParams) -> Self {
        Self {
            weights,
            penalty: PenaltyParams::default(),
            desired_speed: scenario.desired_speed,
            lateral_accel_limit: scenario.lateral_accel_limit,
            distance_threshold: scenario.distance_threshold,
            attention_radius: scenario.attention_radius,
            ego_length: vehicle.length + 2.0 * scenario.safety_margin,
            ego_width: vehicle.width,
        }
    }

    pub fn ego_box(&self, s: &EgoState) -> OrientedBox {
        OrientedBox::new(s.x, s.y, s.yaw, self.ego_length, self.ego_width)
    }
}

/// Unweighted-by-decay cost terms of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CostTerms {
    pub boundary: f64,
    pub traffic: f64,
    pub yaw: f64,
    pub progress: f64,
    pub comfort: f64,
    pub norm: f64,
}

impl CostTerms {
    pub fn total(&self) -> f64 {
        (self.boundary + self.traffic + self.yaw) + self.progress + self.comfort + self.norm
    }
}

/// Everything the running cost needs during one planning tick.
#[derive(Debug, Clone)]
pub struct CostContext<'a> {
    pub setup: &'a CostSetup,
    pub route: &'a Route,
    pub traffic: Traffic,
    start_index: usize,
    initial_d_lat: f64,
    initial_input: ControlInput,
    segments: (usize, usize),
}

impl<'a> CostContext<'a> {
    /// `previous_input` is the input applied just before the plan starts.
    pub fn new(
        setup: &'a CostSetup,
        route: &'a Route,
        start: &EgoState,
        previous_input: ControlInput,
        horizon_s: f64,
        max_speed: f64,
        traffic: Traffic,
    ) -> Result<Self> {
        let p = route.project_to_route(start.position())?;
        let reach = max_speed * horizon_s;
        let segments = route.segments_between(p.arclength - 10.0, p.arclength + reach + 10.0);
        Ok(Self {
            setup,
            route,
            traffic,
            start_index: p.index,
            initial_d_lat: p.d_lat,
            initial_input: previous_input,
            segments,
        })
    }

    pub fn initial_d_lat(&self) -> f64 {
        self.initial_d_lat
    }

    fn traffic_term(&self, t: usize, ego: &OrientedBox) -> f64 {
        let s = self.setup;
        let eval = |o: &Occupancy| {
            traffic_cost(
                ego,
                o.step(t),
                s.distance_threshold,
                s.weights.traffic,
                &s.penalty,
            )
        };
        match &self.traffic {
            Traffic::Single(o) => eval(o),
            Traffic::Blended {
                ai,
                fallback,
                omega,
            } => {
                if *omega == 1.0 {
                    eval(ai)
                } else if *omega == 0.0 {
                    eval(fallback)
                } else {
                    omega * eval(ai) + (1.0 - omega) * eval(fallback)
                }
            }
        }
    }

    /// Cost terms of the state reached at step `t`, plus its lateral offset.
    pub fn terms(
        &self,
        t: usize,
        state: &EgoState,
        input: ControlInput,
        prev_d_lat: f64,
        prev_input: ControlInput,
    ) -> (CostTerms, f64) {
        let s = self.setup;
        let w = &s.weights;
        let p = self
            .route
            .project_in(state.position(), self.segments.0, self.segments.1);
        let limit = self.route.off_route_limit();
        let d_lat = p.d_lat.clamp(-limit, limit);
        let window = self.route.window() as f64;
        let advanced = (p.index as f64 - self.start_index as f64).clamp(0.0, window);
        let v_des = desired_speed(
            s.desired_speed,
            self.route.curvature(p.segment),
            s.lateral_accel_limit,
        );
        let terms = CostTerms {
            boundary: boundary_cost(d_lat, self.route.bounds(p.segment), w.boundary, &s.penalty),
            traffic: self.traffic_term(t, &s.ego_box(state)),
            yaw: yaw_cost(state.yaw, p.yaw_ref, w.yaw),
            progress: progress_cost(advanced, window, w.progress),
            comfort: comfort_cost(d_lat, prev_d_lat, input, prev_input, w),
            norm: norm_cost(d_lat, state.speed, v_des, w, &s.penalty),
        };
        (terms, d_lat)
    }

    pub fn running_cost(
        &self,
        t: usize,
        state: &EgoState,
        input: ControlInput,
        prev_d_lat: f64,
        prev_input: ControlInput,
    ) -> (f64, f64) {
        let (terms, d_lat) = self.terms(t, state, input, prev_d_lat, prev_input);
        (
            decay_factor(t, self.setup.weights.decay) * terms.total(),
            d_lat,
        )
    }
}

impl RolloutCost for CostContext<'_> {
    fn rollout_cost(&self, states: &[EgoState], inputs: &[ControlInput]) -> f64 {
        let mut prev_d = self.initial_d_lat;
        let mut prev_u = self.initial_input;
        let mut total = 0.0;
        for (t, (s, u)) in states.iter().zip(inputs).enumerate() {
            let (c, d) = self.running_cost(t, s, *u, prev_d, prev_u);
            total += c;
            prev_d = d;
            prev_u = *u;
        }
        total
    }
}
