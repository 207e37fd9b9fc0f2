//! Desk-scale scenarios: overtaking on a two-lane road, a crossing junction,
//! a short urban segment with a left turn, and an empty straight road.

use std::f64::consts::FRAC_PI_2;

use super::{
    AgentBehavior, AgentScript, EgoState, LateralBounds, LongitudinalParams, PathBuilder,
    RouteSpec, ScenarioConfig, TrafficJitter,
};
use crate::error::{Error, Result};

pub const BUILTIN_SCENARIOS: &[&str] = &["overtaking", "junction", "urban", "straight_empty"];

const CAR_WIDTH: f64 = 1.9;
const CAR_LENGTH: f64 = 4.5;
const LANE_WIDTH: f64 = 3.5;

pub fn builtin_scenario(id: &str) -> Result<ScenarioConfig> {
    match id {
        "overtaking" => Ok(overtaking()),
        "junction" => Ok(junction()),
        "urban" => Ok(urban()),
        "straight_empty" => Ok(straight_empty()),
        other => Err(Error::UnknownScenario(other.to_string())),
    }
}

fn follower(
    agent_id: u32,
    spawn_time: f64,
    path: Vec<[f64; 2]>,
    speed: f64,
    start_offset: f64,
    lane: u32,
) -> AgentScript {
    AgentScript {
        agent_id,
        spawn_time,
        width: CAR_WIDTH,
        length: CAR_LENGTH,
        behavior: AgentBehavior::RouteFollower {
            path,
            desired_speed: speed,
            initial_speed: speed,
            start_offset,
            lane,
            longitudinal: LongitudinalParams::default(),
        },
    }
}

fn base(
    name: &str,
    route: RouteSpec,
    ego_speed: f64,
    duration: f64,
    desired: f64,
) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        route,
        ego_spawn: EgoState::new(0.0, 0.0, 0.0, ego_speed, 0.0),
        agents: Vec::new(),
        duration,
        desired_speed: desired,
        attention_radius: 50.0,
        distance_threshold: 10.0,
        safety_margin: 0.125,
        lateral_accel_limit: 4.0,
        traffic_jitter: TrafficJitter {
            spawn_time: 1.0,
            speed_frac: 0.1,
        },
    }
}

/// Two-lane straight road: a slow lead vehicle in the ego lane and oncoming
/// traffic in the left lane.
fn overtaking() -> ScenarioConfig {
    let route = RouteSpec::new(
        vec![[0.0, 0.0], [700.0, 0.0]],
        LateralBounds::new(-1.5, LANE_WIDTH + 1.5),
    );
    let mut s = base("overtaking", route, 10.0, 100.0, 14.0);
    s.agents.push(follower(
        1,
        0.0,
        vec![[40.0, 0.0], [900.0, 0.0]],
        6.0,
        0.0,
        0,
    ));
    for i in 0..5 {
        s.agents.push(follower(
            2 + i,
            8.0 * i as f64,
            vec![[800.0, LANE_WIDTH], [-200.0, LANE_WIDTH]],
            10.0,
            500.0 - 40.0 * i as f64,
            1,
        ));
    }
    s
}

/// Straight ego road through a perpendicular junction with one crossing
/// agent per direction, timed to meet the ego near the junction.
fn junction() -> ScenarioConfig {
    let route = RouteSpec::new(
        vec![[0.0, 0.0], [300.0, 0.0]],
        LateralBounds::new(-1.5, 1.5),
    );
    let mut s = base("junction", route, 8.0, 100.0, 10.0);
    s.safety_margin = 1.5;
    s.traffic_jitter = TrafficJitter {
        spawn_time: 0.3,
        speed_frac: 0.03,
    };
    // northbound, reaches y = 0 about half a second before the ego at cruise
    s.agents.push(follower(
        1,
        1.0,
        vec![[100.0, -150.0], [100.0, 200.0]],
        8.0,
        80.4,
        0,
    ));
    // southbound in the far lane, crosses half a second earlier
    s.agents.push(follower(
        2,
        1.0,
        vec![[100.0 + LANE_WIDTH, 150.0], [100.0 + LANE_WIDTH, -200.0]],
        8.0,
        84.4,
        1,
    ));
    s
}

/// Short urban stretch with a left turn, a lead car, oncoming traffic and
/// cross traffic at a side street.
fn urban() -> ScenarioConfig {
    let builder = PathBuilder::new([0.0, 0.0], 0.0)
        .straight(60.0)
        .arc(15.0, FRAC_PI_2)
        .straight(80.0);
    let route = RouteSpec::new(builder.build(), LateralBounds::new(-1.5, 1.5));
    let mut s = base("urban", route, 6.0, 35.0, 10.0);
    s.agents
        .push(follower(1, 0.0, builder.build(), 7.0, 25.0, 0));
    let mut oncoming = builder.build_offset(LANE_WIDTH);
    oncoming.reverse();
    for i in 0..4 {
        s.agents.push(follower(
            2 + i,
            6.0 * i as f64,
            oncoming.clone(),
            8.0,
            0.0,
            1,
        ));
    }
    // side street crossing the first straight at x = 35
    s.agents.push(follower(
        6,
        0.0,
        vec![[35.0, -60.0], [35.0, 120.0]],
        7.0,
        0.0,
        2,
    ));
    s.agents.push(follower(
        7,
        1.0,
        vec![[35.0 + LANE_WIDTH, 120.0], [35.0 + LANE_WIDTH, -60.0]],
        7.0,
        60.0,
        3,
    ));
    s.agents.push(follower(
        8,
        9.0,
        vec![[35.0, -60.0], [35.0, 120.0]],
        7.0,
        0.0,
        2,
    ));
    s
}

fn straight_empty() -> ScenarioConfig {
    let route = RouteSpec::new(
        vec![[0.0, 0.0], [400.0, 0.0]],
        LateralBounds::new(-1.5, 1.5),
    );
    let mut s = base("straight_empty", route, 8.0, 60.0, 10.0);
    s.traffic_jitter = TrafficJitter::default();
    s
}
