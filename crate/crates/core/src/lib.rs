//! Closed-loop trajectory planning with reliability-weighted trajectory
//! predictions.
//!
//! An MPPI planner scores sampled input sequences of a kinematic single-track
//! vehicle against a cost that includes traffic penalties derived from
//! multimodal predictions. A moving-horizon reliability estimator compares
//! past predictions with what the agents actually did and blends the
//! predictor's traffic cost with that of a constant-velocity fallback.

pub mod config;
pub mod costs;
pub mod dynamics;
mod error;
pub mod mppi;
pub mod predictors;
pub mod results;
pub mod scenario;
pub mod sim;
pub mod stats;
pub mod trustmhe;

pub use error::{Error, Result};
pub use scenario::{
    wrap_angle, AgentState, ControlInput, EgoState, Pose, PredictionPoint, PredictionSet, Route,
    ScenarioConfig, TrajectoryModality,
};
