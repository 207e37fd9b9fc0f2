//! Trajectory predictors: a constant-velocity physical fallback and a
//! synthetic multimodal oracle whose output can be deliberately degraded.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{
    wrap_angle, AgentState, Pose, PredictionPoint, PredictionSet, TrajectoryModality,
};

/// Standard deviation attached to fallback predictions, m.
pub const FALLBACK_SIGMA: f64 = 0.1;

/// Source of the agents' realised future motion.
pub trait GroundTruth {
    /// Pose of `agent_id` at absolute time `time`, extrapolated if the agent
    /// has left the scene. `None` if the agent is unknown.
    fn future_pose(&self, agent_id: u32, time: f64) -> Option<Pose>;
}

/// Agents to predict at one prediction tick.
#[derive(Debug, Clone, Copy)]
pub struct PredictionRequest<'a> {
    pub agents: &'a [AgentState],
    /// Simulation step at which the prediction is generated.
    pub generated_at: u64,
    /// Simulation time of `generated_at`, s.
    pub time: f64,
}

pub trait Predictor {
    /// One [`PredictionSet`] per requested agent, in request order.
    fn predict(&self, request: &PredictionRequest<'_>) -> Vec<PredictionSet>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackModel {
    /// Constant speed and heading.
    #[default]
    ConstantVelocity,
    /// Constant speed and yaw rate.
    ConstantTurnRate,
}

fn point(pose: Pose, sigma: f64) -> PredictionPoint {
    PredictionPoint {
        mean_x: pose.x,
        mean_y: pose.y,
        sigma_x: sigma,
        sigma_y: sigma,
        rho: 0.0,
        yaw: pose.yaw,
    }
}

fn single_modality(
    agent: &AgentState,
    step_dt: f64,
    generated_at: u64,
    points: Vec<PredictionPoint>,
) -> PredictionSet {
    PredictionSet {
        agent_id: agent.agent_id,
        generated_at,
        step_dt,
        origin: agent.pose(),
        width: agent.width,
        length: agent.length,
        modalities: vec![TrajectoryModality {
            points,
            confidence: 1.0,
        }],
    }
}

/// Straight-line extrapolation at constant speed.
pub fn predict_constant_velocity(
    agent: &AgentState,
    horizon: usize,
    step_dt: f64,
    generated_at: u64,
) -> PredictionSet {
    let (sin, cos) = agent.yaw.sin_cos();
    let points = (1..=horizon)
        .map(|t| {
            let d = t as f64 * step_dt * agent.speed;
            point(
                Pose::new(agent.x + d * cos, agent.y + d * sin, agent.yaw),
                FALLBACK_SIGMA,
            )
        })
        .collect();
    single_modality(agent, step_dt, generated_at, points)
}

/// Circular-arc extrapolation at constant speed and yaw rate.
pub fn predict_constant_turn_rate(
    agent: &AgentState,
    horizon: usize,
    step_dt: f64,
    generated_at: u64,
) -> PredictionSet {
    let w = agent.yaw_rate;
    if w.abs() < 1e-6 {
        return predict_constant_velocity(agent, horizon, step_dt, generated_at);
    }
    let r = agent.speed / w;
    let points = (1..=horizon)
        .map(|t| {
            let yaw = agent.yaw + w * t as f64 * step_dt;
            point(
                Pose::new(
                    agent.x + r * (yaw.sin() - agent.yaw.sin()),
                    agent.y - r * (yaw.cos() - agent.yaw.cos()),
                    wrap_angle(yaw),
                ),
                FALLBACK_SIGMA,
            )
        })
        .collect();
    single_modality(agent, step_dt, generated_at, points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsPredictor {
    pub horizon: usize,
    pub step_dt: f64,
    pub model: FallbackModel,
}

impl PhysicsPredictor {
    pub fn predict_agent(&self, agent: &AgentState, generated_at: u64) -> PredictionSet {
        match self.model {
            FallbackModel::ConstantVelocity => {
                predict_constant_velocity(agent, self.horizon, self.step_dt, generated_at)
            }
            FallbackModel::ConstantTurnRate => {
                predict_constant_turn_rate(agent, self.horizon, self.step_dt, generated_at)
            }
        }
    }
}

impl Predictor for PhysicsPredictor {
    fn predict(&self, request: &PredictionRequest<'_>) -> Vec<PredictionSet> {
        request
            .agents
            .iter()
            .map(|a| self.predict_agent(a, request.generated_at))
            .collect()
    }
}

/// Time window in which the oracle's output is corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationSchedule {
    pub onset_s: f64,
    pub offset_s: f64,
    /// Per-step random-walk scale added to predicted positions, m.
    #[serde(default)]
    pub sigma_deg: f64,
    /// Rotation applied to predicted motion about the agent's position, rad.
    #[serde(default)]
    pub heading_bias: f64,
    #[serde(default)]
    pub shuffle_confidences: bool,
}

impl DegradationSchedule {
    pub fn is_active(&self, time: f64) -> bool {
        time >= self.onset_s && time < self.offset_s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.onset_s < self.offset_s) {
            return Err(Error::config("degradation.onset_s", "must be < offset_s"));
        }
        if !(self.sigma_deg >= 0.0) {
            return Err(Error::config("degradation.sigma_deg", "must be >= 0"));
        }
        if !self.heading_bias.is_finite() {
            return Err(Error::config("degradation.heading_bias", "must be finite"));
        }
        Ok(())
    }
}

/// Noise of the oracle outside degradation windows. All-zero parameters
/// reproduce the ground truth exactly in every modality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleParams {
    /// Per-step random walk on the first modality, m.
    pub baseline_sigma: f64,
    /// Std of the lateral end offset of the alternative modalities, m.
    pub lateral_spread: f64,
    /// Std of the relative speed scaling of the alternative modalities.
    pub speed_spread: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            baseline_sigma: 0.05,
            lateral_spread: 0.5,
            speed_spread: 0.1,
        }
    }
}

impl OracleParams {
    pub const EXACT: OracleParams = OracleParams {
        baseline_sigma: 0.0,
        lateral_spread: 0.0,
        speed_spread: 0.0,
    };
}

/// Stand-in for a learned multimodal predictor: reads the scripted future of
/// each agent and perturbs it.
pub struct OraclePredictor<'a, G: ?Sized> {
    truth: &'a G,
    pub modalities: usize,
    pub horizon: usize,
    pub step_dt: f64,
    pub params: OracleParams,
    pub schedule: Option<DegradationSchedule>,
    pub seed: u64,
}

/// splitmix64 finaliser; derives independent per-agent random streams.
pub(crate) fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z =
        seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl<'a, G: GroundTruth + ?Sized> OraclePredictor<'a, G> {
    pub fn new(truth: &'a G, modalities: usize, horizon: usize, step_dt: f64, seed: u64) -> Self {
        Self {
            truth,
            modalities,
            horizon,
            step_dt,
            params: OracleParams::default(),
            schedule: None,
            seed,
        }
    }

    fn truth_at(&self, agent: &AgentState, origin_time: f64, offset: f64) -> Pose {
        self.truth
            .future_pose(agent.agent_id, origin_time + offset)
            .unwrap_or_else(|| {
                let (sin, cos) = agent.yaw.sin_cos();
                let d = agent.speed * offset;
                Pose::new(agent.x + d * cos, agent.y + d * sin, agent.yaw)
            })
    }

    pub fn predict_agent(&self, agent: &AgentState, time: f64, generated_at: u64) -> PredictionSet {
        let mut rng =
            ChaCha8Rng::seed_from_u64(mix_seed(self.seed, agent.agent_id as u64, generated_at));
        let p = self.params;
        let horizon_s = self.horizon as f64 * self.step_dt;
        let mut modalities = Vec::with_capacity(self.modalities);
        for k in 0..self.modalities {
            let (lateral, speed_scale) = if k == 0 {
                (0.0, 1.0)
            } else {
                let lat: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * p.lateral_spread;
                let sc: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal) * p.speed_spread;
                (lat, (1.0 + sc).clamp(0.5, 1.5))
            };
            let mut walk = [0.0f64; 2];
            let points = (1..=self.horizon)
                .map(|i| {
                    let tau = i as f64 * self.step_dt;
                    let mut pose = self.truth_at(agent, time, tau * speed_scale);
                    if k == 0 && p.baseline_sigma > 0.0 {
                        walk[0] +=
                            rng.sample::<f64, _>(rand_distr::StandardNormal) * p.baseline_sigma;
                        walk[1] +=
                            rng.sample::<f64, _>(rand_distr::StandardNormal) * p.baseline_sigma;
                    }
                    if lateral != 0.0 {
                        let l = lateral * tau / horizon_s;
                        pose.x -= l * pose.yaw.sin();
                        pose.y += l * pose.yaw.cos();
                    }
                    pose.x += walk[0];
                    pose.y += walk[1];
                    point(pose, 0.1 + 0.1 * tau)
                })
                .collect();
            modalities.push(TrajectoryModality {
                points,
                confidence: (-0.7 * k as f64).exp(),
            });
        }
        let mut set = PredictionSet {
            agent_id: agent.agent_id,
            generated_at,
            step_dt: self.step_dt,
            origin: agent.pose(),
            width: agent.width,
            length: agent.length,
            modalities,
        };
        if let Some(schedule) = self.schedule.filter(|s| s.is_active(time)) {
            degrade(&mut set, &schedule, &mut rng);
        }
        set.normalize_confidences();
        set
    }
}

fn degrade(set: &mut PredictionSet, schedule: &DegradationSchedule, rng: &mut ChaCha8Rng) {
    let (sin, cos) = schedule.heading_bias.sin_cos();
    let noise = Normal::new(0.0, schedule.sigma_deg.max(0.0)).expect("finite sigma");
    let origin = set.origin;
    for m in &mut set.modalities {
        let mut walk = [0.0f64; 2];
        for p in &mut m.points {
            let (dx, dy) = (p.mean_x - origin.x, p.mean_y - origin.y);
            if schedule.sigma_deg > 0.0 {
                walk[0] += noise.sample(rng);
                walk[1] += noise.sample(rng);
            }
            p.mean_x = origin.x + cos * dx - sin * dy + walk[0];
            p.mean_y = origin.y + sin * dx + cos * dy + walk[1];
            p.yaw = wrap_angle(p.yaw + schedule.heading_bias);
        }
    }
    if schedule.shuffle_confidences {
        let mut c: Vec<f64> = set.modalities.iter().map(|m| m.confidence).collect();
        c.shuffle(rng);
        for (m, c) in set.modalities.iter_mut().zip(c) {
            m.confidence = c;
        }
    }
}

impl<G: GroundTruth + ?Sized> Predictor for OraclePredictor<'_, G> {
    fn predict(&self, request: &PredictionRequest<'_>) -> Vec<PredictionSet> {
        request
            .agents
            .iter()
            .map(|a| self.predict_agent(a, request.time, request.generated_at))
            .collect()
    }
}
