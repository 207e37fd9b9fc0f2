//! Fixtures shared by the benchmarks.

use trustsim_core::config::ExperimentConfig;
use trustsim_core::costs::{CostSetup, Occupancy};
use trustsim_core::predictors::{OraclePredictor, PhysicsPredictor, PredictionRequest, Predictor};
use trustsim_core::scenario::Route;
use trustsim_core::sim::TrafficModel;
use trustsim_core::{AgentState, EgoState, PredictionSet};

/// The junction a few metres before the crossing, both agents close by.
pub struct JunctionFixture {
    pub config: ExperimentConfig,
    pub route: Route,
    pub setup: CostSetup,
    pub ego: EgoState,
    pub agents: Vec<AgentState>,
    pub ai: Vec<PredictionSet>,
    pub fallback: Vec<PredictionSet>,
}

impl JunctionFixture {
    pub fn new() -> Self {
        let config = ExperimentConfig::new("junction");
        let scenario = config.resolve_scenario().expect("builtin scenario");
        let route = scenario.route.build().expect("builtin route");
        let setup = CostSetup::new(config.weights(), &scenario, &config.vehicle);
        let traffic = TrafficModel::new(&scenario, 2, 40.0).expect("builtin traffic");
        let t = 8.0;
        let agents = traffic.agents_at(t);
        let request = PredictionRequest {
            agents: &agents,
            generated_at: 1600,
            time: t,
        };
        let ai = OraclePredictor::new(&traffic, 6, 50, 0.25, 2).predict(&request);
        let fallback = PhysicsPredictor {
            horizon: 50,
            step_dt: 0.25,
            model: Default::default(),
        }
        .predict(&request);
        JunctionFixture {
            config,
            route,
            setup,
            ego: EgoState::new(78.0, 0.0, 0.0, 10.0, 0.0),
            agents,
            ai,
            fallback,
        }
    }

    pub fn occupancy(&self, sets: &[PredictionSet]) -> Occupancy {
        Occupancy::build(
            sets.iter().map(|s| (s, 0.0)),
            self.ego.position(),
            50.0,
            0.1,
            50,
        )
    }
}

impl Default for JunctionFixture {
    fn default() -> Self {
        Self::new()
    }
}
