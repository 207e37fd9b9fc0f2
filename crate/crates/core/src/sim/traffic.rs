//! Scripted traffic. Agents do not react to the ego, so their motion for the
//! whole run is integrated up front and then sampled by time.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::predictors::GroundTruth;
use crate::scenario::{
    wrap_angle, AgentBehavior, AgentState, LongitudinalParams, Polyline, Pose, ScenarioConfig,
    MAX_AGENT_SPEED, MIN_AGENT_SPEED,
};

/// Sampling interval of the precomputed trajectories, s.
pub const TRAFFIC_DT: f64 = 0.05;

/// Time headway of the car-following model, s.
const HEADWAY: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Sample {
    x: f64,
    y: f64,
    yaw: f64,
    speed: f64,
}

#[derive(Debug, Clone)]
struct Track {
    id: u32,
    width: f64,
    length: f64,
    start: f64,
    samples: Vec<Sample>,
}

impl Track {
    fn end(&self) -> f64 {
        self.start + (self.samples.len() - 1) as f64 * TRAFFIC_DT
    }

    fn present(&self, t: f64) -> bool {
        !self.samples.is_empty() && t >= self.start && t <= self.end()
    }

    fn sample_at(&self, t: f64) -> (Pose, f64, f64) {
        let f = ((t - self.start) / TRAFFIC_DT).max(0.0);
        let last = self.samples.len() - 1;
        let i = (f.floor() as usize).min(last);
        let frac = if i == last { 0.0 } else { f - i as f64 };
        let a = self.samples[i];
        let b = self.samples[(i + 1).min(last)];
        let pose = Pose::new(a.x, a.y, a.yaw).lerp(&Pose::new(b.x, b.y, b.yaw), frac);
        let speed = a.speed + (b.speed - a.speed) * frac;
        let yaw_rate = if i == last {
            0.0
        } else {
            wrap_angle(b.yaw - a.yaw) / TRAFFIC_DT
        };
        (pose, speed, yaw_rate)
    }
}

#[derive(Debug, Clone)]
pub struct TrafficModel {
    tracks: Vec<Track>,
}

struct Follower {
    id: u32,
    line: Polyline,
    lane: u32,
    desired: f64,
    s: f64,
    v: f64,
    start: f64,
    params: LongitudinalParams,
    length: f64,
    active: bool,
    done: bool,
}

impl TrafficModel {
    /// Integrates all agents over `[0, until]` with per-seed jitter.
    pub fn new(scenario: &ScenarioConfig, seed: u64, until: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let jitter = scenario.traffic_jitter;
        let mut tracks: BTreeMap<u32, Track> = BTreeMap::new();
        let mut followers = Vec::new();
        for a in &scenario.agents {
            // draw both values for every agent so streams stay aligned
            let shift: f64 = rng.random_range(-1.0..=1.0) * jitter.spawn_time;
            let scale: f64 = 1.0 + rng.random_range(-1.0..=1.0) * jitter.speed_frac;
            let start = (a.spawn_time + shift).max(0.0);
            let mut track = Track {
                id: a.agent_id,
                width: a.width,
                length: a.length,
                start,
                samples: Vec::new(),
            };
            match &a.behavior {
                AgentBehavior::RouteFollower {
                    path,
                    desired_speed,
                    initial_speed,
                    start_offset,
                    lane,
                    longitudinal,
                } => {
                    let desired = (desired_speed * scale).clamp(MIN_AGENT_SPEED, MAX_AGENT_SPEED);
                    followers.push(Follower {
                        id: a.agent_id,
                        line: Polyline::new(path.clone())?,
                        lane: *lane,
                        desired,
                        s: *start_offset,
                        v: (initial_speed * scale).clamp(0.0, MAX_AGENT_SPEED),
                        start,
                        params: *longitudinal,
                        length: a.length,
                        active: false,
                        done: false,
                    });
                }
                AgentBehavior::Waypoints { points } => {
                    track.start = (points[0][0] + shift).max(0.0);
                    track.samples = sample_waypoints(points);
                }
            }
            tracks.insert(a.agent_id, track);
        }
        integrate_followers(&mut followers, &mut tracks, until);
        Ok(Self {
            tracks: tracks
                .into_values()
                .filter(|t| !t.samples.is_empty())
                .collect(),
        })
    }

    /// Agents present at `t`, ordered by id.
    pub fn agents_at(&self, t: f64) -> Vec<AgentState> {
        self.tracks
            .iter()
            .filter(|tr| tr.present(t))
            .map(|tr| {
                let (p, speed, yaw_rate) = tr.sample_at(t);
                AgentState {
                    agent_id: tr.id,
                    x: p.x,
                    y: p.y,
                    yaw: p.yaw,
                    speed,
                    yaw_rate,
                    width: tr.width,
                    length: tr.length,
                }
            })
            .collect()
    }
}

impl GroundTruth for TrafficModel {
    fn future_pose(&self, agent_id: u32, time: f64) -> Option<Pose> {
        let tr = self.tracks.iter().find(|t| t.id == agent_id)?;
        let end = tr.end();
        if time <= end {
            return Some(tr.sample_at(time).0);
        }
        // left the scene: keep going straight at the last speed
        let last = tr.samples[tr.samples.len() - 1];
        let d = last.speed * (time - end);
        Some(Pose::new(
            last.x + d * last.yaw.cos(),
            last.y + d * last.yaw.sin(),
            last.yaw,
        ))
    }
}

fn sample_waypoints(points: &[[f64; 3]]) -> Vec<Sample> {
    let (t0, t1) = (points[0][0], points[points.len() - 1][0]);
    let n = ((t1 - t0) / TRAFFIC_DT).floor() as usize;
    let mut out = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for k in 0..=n {
        let t = t0 + k as f64 * TRAFFIC_DT;
        while seg + 2 < points.len() && t > points[seg + 1][0] {
            seg += 1;
        }
        let (a, b) = (points[seg], points[seg + 1]);
        let span = b[0] - a[0];
        let f = ((t - a[0]) / span).clamp(0.0, 1.0);
        let (dx, dy) = (b[1] - a[1], b[2] - a[2]);
        out.push(Sample {
            x: a[1] + f * dx,
            y: a[2] + f * dy,
            yaw: dy.atan2(dx),
            speed: dx.hypot(dy) / span,
        });
    }
    out
}

fn integrate_followers(followers: &mut [Follower], tracks: &mut BTreeMap<u32, Track>, until: f64) {
    let steps = (until / TRAFFIC_DT).ceil() as usize;
    for k in 0..=steps {
        let t = k as f64 * TRAFFIC_DT;
        for f in followers.iter_mut() {
            if !f.active && !f.done && t + 1e-9 >= f.start {
                f.active = true;
                tracks.get_mut(&f.id).expect("track").start = t;
            }
        }
        // record, then advance everyone from the same snapshot
        let snapshot: Vec<(u32, f64, f64, f64, bool)> = followers
            .iter()
            .map(|f| (f.lane, f.s, f.v, f.length, f.active))
            .collect();
        for (i, f) in followers.iter_mut().enumerate() {
            if !f.active {
                continue;
            }
            let pose = f.line.pose_at(f.s);
            tracks.get_mut(&f.id).expect("track").samples.push(Sample {
                x: pose.x,
                y: pose.y,
                yaw: pose.yaw,
                speed: f.v,
            });
            if f.s >= f.line.length() {
                f.active = false;
                f.done = true;
                continue;
            }
            let p = f.params;
            let mut accel = p.max_accel * (1.0 - (f.v / f.desired).powi(4));
            let leader = snapshot
                .iter()
                .enumerate()
                .filter(|(j, o)| *j != i && o.4 && o.0 == f.lane && o.1 > f.s)
                .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1));
            if let Some((_, &(_, s_lead, v_lead, len_lead, _))) = leader {
                let gap = (s_lead - f.s - 0.5 * (len_lead + f.length)).max(0.1);
                let wanted = p.desired_gap
                    + f.v * HEADWAY
                    + f.v * (f.v - v_lead) / (2.0 * (p.max_accel * p.max_decel).sqrt());
                accel -= p.max_accel * (wanted.max(0.0) / gap).powi(2);
            }
            let accel = accel.clamp(-9.0, p.max_accel);
            f.v = (f.v + accel * TRAFFIC_DT).max(0.0);
            f.s += f.v * TRAFFIC_DT;
        }
    }
}
