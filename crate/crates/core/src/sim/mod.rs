//! Deterministic closed-loop simulation.
//!
//! Physics runs on a 5 ms tick; the planner replans every 100 ms from the
//! state it expects one replan interval ahead; predictions and the
//! reliability estimate update every 250 ms.

mod crash;
mod schedule;
mod trace;
mod tracker;
mod traffic;

pub use crash::{CrashMonitor, REARM_CLEARANCE};
pub use schedule::{Schedule, Tasks};
pub use trace::{write_trace, TraceRow, TRACE_COLUMNS, TRACE_MAGIC};
pub use tracker::{track, TimedPlan, TrackerParams};
pub use traffic::{TrafficModel, TRAFFIC_DT};

use std::time::Instant;

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::costs::{box_distance, CostContext, CostSetup, Occupancy, OrientedBox, Traffic};
use crate::dynamics::step;
use crate::error::Result;
use crate::mppi::Planner;
use crate::predictors::{
    mix_seed, OraclePredictor, PhysicsPredictor, PredictionRequest, Predictor,
};
use crate::scenario::{AgentState, ControlInput, EgoState, PredictionSet};
use crate::trustmhe::ReliabilityState;

/// Metrics of one closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub crashes: u32,
    /// Share of the route covered, percent.
    pub progress: f64,
    pub success: bool,
    /// Smallest ego-agent box distance over the run, m. Infinite when no
    /// agent was ever present.
    pub min_dist: f64,
    /// Simulated time at the end of the run, s.
    pub sim_time: f64,
    pub final_omega: f64,
    /// Wall-clock duration, s. Not deterministic.
    pub wall_time: f64,
    /// Longest single planning tick, ms. Not deterministic.
    pub max_plan_ms: f64,
}

impl RunRecord {
    /// Deterministic part of the record, for comparisons.
    pub fn without_timing(&self) -> RunRecord {
        RunRecord {
            wall_time: 0.0,
            max_plan_ms: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub trace: Vec<TraceRow>,
}

/// Random streams of a run, all derived from the experiment seed.
fn streams(seed: u64) -> (u64, u64, u64) {
    (
        mix_seed(seed, 1, 0),
        mix_seed(seed, 2, 0),
        mix_seed(seed, 3, 0),
    )
}

fn in_radius(agents: &[AgentState], ego: &EgoState, radius: f64) -> Vec<AgentState> {
    agents
        .iter()
        .filter(|a| (a.x - ego.x).hypot(a.y - ego.y) <= radius)
        .copied()
        .collect()
}

/// Latest prediction batches and the step they were generated at.
struct Batch {
    step: u64,
    ai: Vec<PredictionSet>,
    fallback: Vec<PredictionSet>,
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let wall = Instant::now();
    let scenario = config.resolve_scenario()?;
    let route = scenario.route.build()?;
    let vehicle = config.vehicle;
    let timing = config.timing;
    let dt = timing.state_dt;
    let schedule = Schedule::new(timing.replan_ticks(), timing.prediction_ticks());
    let (planner_seed, oracle_seed, traffic_seed) = streams(config.seed);
    let pred_horizon_s = config.prediction.horizon as f64 * timing.prediction_dt;
    let traffic = TrafficModel::new(
        &scenario,
        traffic_seed,
        scenario.duration + pred_horizon_s + 1.0,
    )?;

    let mut oracle = OraclePredictor::new(
        &traffic,
        config.prediction.modalities,
        config.prediction.horizon,
        timing.prediction_dt,
        oracle_seed,
    );
    oracle.params = config.prediction.oracle;
    oracle.schedule = config.degradation;
    let physics = PhysicsPredictor {
        horizon: config.prediction.horizon,
        step_dt: timing.prediction_dt,
        model: config.prediction.fallback,
    };
    let setup = CostSetup::new(config.weights(), &scenario, &vehicle);
    let mut planner = Planner::new(config.planner, vehicle);
    let mut rng = ChaCha8Rng::seed_from_u64(planner_seed);
    let mut estimator = ReliabilityState::new(config.trustmhe);
    let enabled = config.trustmhe.enabled;
    let stale_after = config.tracker.stale_intervals * timing.replan_dt;

    let mut ego = scenario.ego_spawn;
    let mut active: Option<TimedPlan> = None;
    let mut pending: Option<TimedPlan> = None;
    let mut batch: Option<Batch> = None;
    let mut prediction_tick = 0u64;
    let mut crashes = CrashMonitor::default();
    let mut min_dist = f64::INFINITY;
    let mut best_arclength = route
        .project_in(ego.position(), 0, route.segment_count())
        .arclength
        .max(0.0);
    let mut trace = Vec::new();
    let mut max_plan_ms = 0.0f64;
    let total_steps = (scenario.duration / dt).round() as u64;
    let mut step_index = 0u64;
    let mut last_estimate = None;

    while step_index < total_steps {
        let t = step_index as f64 * dt;
        let tasks = schedule.due(step_index);
        let agents = traffic.agents_at(t);

        if tasks.predict {
            let visible = in_radius(&agents, &ego, scenario.attention_radius);
            let request = PredictionRequest {
                agents: &visible,
                generated_at: step_index,
                time: t,
            };
            let ai = oracle.predict(&request);
            let fallback = physics.predict(&request);
            for s in &ai {
                s.validate()?;
            }
            last_estimate = if enabled {
                Some(estimator.tick(prediction_tick, visible.clone(), ai.clone()))
            } else {
                None
            };
            prediction_tick += 1;
            batch = Some(Batch {
                step: step_index,
                ai,
                fallback,
            });
        }

        if pending.as_ref().is_some_and(|p| t + 1e-9 >= p.t0) {
            active = pending.take();
        }

        if tasks.replan {
            let plan_start = Instant::now();
            let (start, t0) = match &active {
                None => (ego, t),
                Some(plan) => (
                    step(&ego, plan.input_at(t), &vehicle, timing.replan_dt),
                    t + timing.replan_dt,
                ),
            };
            let omega = if enabled { estimator.omega() } else { 1.0 };
            let b = batch.as_ref().expect("predictions precede the first plan");
            let visible = in_radius(&agents, &ego, scenario.attention_radius);
            let generated = b.step as f64 * dt;
            // agents that appeared after the last prediction get the fallback
            let late: Vec<PredictionSet> = visible
                .iter()
                .filter(|a| !b.ai.iter().any(|s| s.agent_id == a.agent_id))
                .map(|a| physics.predict_agent(a, step_index))
                .collect();
            if !late.is_empty() {
                debug!(
                    "{} agents without prediction at t={t:.3}; using fallback",
                    late.len()
                );
            }
            let occupancy = |sets: &[PredictionSet]| {
                let items = sets
                    .iter()
                    .map(|s| (s, t0 - generated))
                    .chain(late.iter().map(|s| (s, t0 - t)));
                Occupancy::build(
                    items,
                    ego.position(),
                    scenario.attention_radius,
                    config.planner.dt,
                    config.planner.horizon,
                )
            };
            let traffic_term = if enabled {
                Traffic::blended(occupancy(&b.ai), occupancy(&b.fallback), omega)?
            } else {
                Traffic::Single(occupancy(&b.ai))
            };
            let previous_input = active
                .as_ref()
                .map_or(ControlInput::ZERO, |p| p.input_at(t));
            let ctx = CostContext::new(
                &setup,
                &route,
                &start,
                previous_input,
                config.planner.horizon_s(),
                vehicle.max_speed,
                traffic_term,
            )?;
            if active.is_some() {
                planner.shift();
            }
            let out = planner.plan(&start, &ctx, &mut rng);
            let plan = TimedPlan {
                t0,
                dt: config.planner.dt,
                start,
                states: out.states,
                inputs: out.inputs,
            };
            if active.is_none() {
                active = Some(plan);
            } else {
                pending = Some(plan);
            }
            max_plan_ms = max_plan_ms.max(plan_start.elapsed().as_secs_f64() * 1e3);
        }

        if tasks.predict {
            trace.push(TraceRow {
                time: t,
                omega: if enabled { estimator.omega() } else { 1.0 },
                estimate: last_estimate,
                ego_x: ego.x,
                ego_y: ego.y,
                ego_v: ego.speed,
                min_dist,
                crashes: crashes.count(),
            });
        }

        let plan = active.as_ref().expect("plan exists after step 0");
        let u = track(&ego, plan, t, &vehicle, &config.tracker, stale_after);
        ego = step(&ego, u, &vehicle, dt);
        step_index += 1;

        let t_next = step_index as f64 * dt;
        let ego_box = OrientedBox::new(ego.x, ego.y, ego.yaw, vehicle.length, vehicle.width);
        let distances: Vec<(u32, f64)> = traffic
            .agents_at(t_next)
            .iter()
            .map(|a| {
                let b = OrientedBox::new(a.x, a.y, a.yaw, a.length, a.width);
                (a.agent_id, box_distance(&ego_box, &b))
            })
            .collect();
        for (_, d) in &distances {
            min_dist = min_dist.min(*d);
        }
        crashes.update(&distances);

        let p = route.project_in(ego.position(), 0, route.segment_count());
        best_arclength = best_arclength.max(p.arclength);
        if best_arclength >= route.length() {
            break;
        }
    }

    let progress = (100.0 * best_arclength / route.length()).clamp(0.0, 100.0);
    let record = RunRecord {
        crashes: crashes.count(),
        progress,
        success: crashes.count() == 0,
        min_dist,
        sim_time: step_index as f64 * dt,
        final_omega: if enabled { estimator.omega() } else { 1.0 },
        wall_time: wall.elapsed().as_secs_f64(),
        max_plan_ms,
    };
    Ok(RunOutput { record, trace })
}
