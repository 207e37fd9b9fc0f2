//! Experiment configuration, read from TOML.
//!
//! ```toml
//! schema_version = 1
//! scenario = "junction"
//! mode = "balanced"
//! seed = 7
//!
//! [trustmhe]
//! enabled = true
//! t_est = 5
//!
//! [degradation]
//! onset_s = 3.0
//! offset_s = 30.0
//! heading_bias = 3.14159
//! ```
//!
//! Every table is optional except the top-level keys `schema_version` and
//! `scenario`. Unknown keys are rejected.

use serde::{Deserialize, Serialize};

use crate::costs::{CostWeights, PlannerMode};
use crate::dynamics::VehicleParams;
use crate::error::{Error, Result};
use crate::mppi::PlannerConfig;
use crate::predictors::{DegradationSchedule, FallbackModel, OracleParams};
use crate::scenario::{builtin_scenario, ScenarioConfig, TrafficJitter};
use crate::sim::TrackerParams;
use crate::trustmhe::TrustMheConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// Scenario id that selects `custom_scenario` instead of a built-in one.
pub const CUSTOM_SCENARIO: &str = "custom";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    /// Physics tick, s.
    pub state_dt: f64,
    pub replan_dt: f64,
    pub prediction_dt: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            state_dt: 0.005,
            replan_dt: 0.1,
            prediction_dt: 0.25,
        }
    }
}

fn ratio(field: &str, interval: f64, base: f64) -> Result<u64> {
    let r = interval / base;
    let n = r.round();
    if !(n >= 1.0) || (r - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::config(
            field,
            format!("{interval} s is not a positive multiple of the state tick {base} s"),
        ));
    }
    Ok(n as u64)
}

impl TimingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.state_dt > 0.0) {
            return Err(Error::config("timing.state_dt", "must be > 0"));
        }
        ratio("timing.replan_dt", self.replan_dt, self.state_dt)?;
        ratio("timing.prediction_dt", self.prediction_dt, self.state_dt)?;
        Ok(())
    }

    /// State ticks per replan.
    pub fn replan_ticks(&self) -> u64 {
        ratio("timing.replan_dt", self.replan_dt, self.state_dt).unwrap_or(1)
    }

    /// State ticks per prediction.
    pub fn prediction_ticks(&self) -> u64 {
        ratio("timing.prediction_dt", self.prediction_dt, self.state_dt).unwrap_or(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictionConfig {
    pub modalities: usize,
    /// Prediction horizon in prediction steps of `timing.prediction_dt`.
    pub horizon: usize,
    pub fallback: FallbackModel,
    pub oracle: OracleParams,
}

impl Default for PredictionConfig {
    fn default() -> Self {
        Self {
            modalities: 6,
            horizon: 50,
            fallback: FallbackModel::ConstantVelocity,
            oracle: OracleParams::default(),
        }
    }
}

/// Optional per-experiment changes to the selected scenario.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioOverrides {
    pub duration: Option<f64>,
    pub desired_speed: Option<f64>,
    pub safety_margin: Option<f64>,
    pub traffic_jitter: Option<TrafficJitter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub scenario: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_scenario: Option<ScenarioConfig>,
    #[serde(default)]
    pub scenario_overrides: ScenarioOverrides,
    #[serde(default)]
    pub mode: PlannerMode,
    /// Replaces the weight table row of `mode` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<CostWeights>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub trustmhe: TrustMheConfig,
    #[serde(default)]
    pub timing: TimingConfig,
    #[serde(default)]
    pub prediction: PredictionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degradation: Option<DegradationSchedule>,
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub tracker: TrackerParams,
}

impl ExperimentConfig {
    pub fn new(scenario: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scenario: scenario.to_string(),
            custom_scenario: None,
            scenario_overrides: ScenarioOverrides::default(),
            mode: PlannerMode::default(),
            weights: None,
            seed: 0,
            planner: PlannerConfig::default(),
            trustmhe: TrustMheConfig::default(),
            timing: TimingConfig::default(),
            prediction: PredictionConfig::default(),
            degradation: None,
            vehicle: VehicleParams::default(),
            tracker: TrackerParams::default(),
        }
    }

    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    /// Like [`from_toml`](Self::from_toml), applying dotted `key=value`
    /// overrides before deserialising.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: Self = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    /// Compact JSON echo; field order is fixed, so equal configs give equal text.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn weights(&self) -> CostWeights {
        self.weights
            .unwrap_or_else(|| CostWeights::for_mode(self.mode))
    }

    pub fn resolve_scenario(&self) -> Result<ScenarioConfig> {
        let mut s = if self.scenario == CUSTOM_SCENARIO {
            self.custom_scenario.clone().ok_or_else(|| {
                Error::config("custom_scenario", "required when scenario = \"custom\"")
            })?
        } else {
            builtin_scenario(&self.scenario)?
        };
        let o = &self.scenario_overrides;
        if let Some(d) = o.duration {
            s.duration = d;
        }
        if let Some(v) = o.desired_speed {
            s.desired_speed = v;
        }
        if let Some(m) = o.safety_margin {
            s.safety_margin = m;
        }
        if let Some(j) = o.traffic_jitter {
            s.traffic_jitter = j;
        }
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!(
                    "unsupported version {} (expected {SCHEMA_VERSION})",
                    self.schema_version
                ),
            ));
        }
        self.resolve_scenario()?.validate()?;
        self.planner.validate()?;
        self.trustmhe.validate()?;
        self.timing.validate()?;
        self.vehicle.validate()?;
        self.tracker.validate()?;
        self.weights().validate()?;
        if let Some(d) = &self.degradation {
            d.validate()?;
        }
        let p = &self.prediction;
        if p.modalities < 1 {
            return Err(Error::config("prediction.modalities", "must be >= 1"));
        }
        if p.horizon < 1 {
            return Err(Error::config("prediction.horizon", "must be >= 1"));
        }
        if self.trustmhe.t_est > p.horizon {
            return Err(Error::config(
                "trustmhe.t_est",
                format!("exceeds the prediction horizon of {} steps", p.horizon),
            ));
        }
        let o = &p.oracle;
        if !(o.baseline_sigma >= 0.0 && o.lateral_spread >= 0.0 && o.speed_spread >= 0.0) {
            return Err(Error::config(
                "prediction.oracle",
                "noise scales must be >= 0",
            ));
        }
        Ok(())
    }
}

/// Sets `key` (dotted path) to `value` in `doc`. The value is read as a TOML
/// literal, or as a bare string if that fails.
pub fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::ConfigParse(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::ConfigParse(format!("bad override key `{key}`")));
    }
    let mut table = doc;
    for part in &parts[..parts.len() - 1] {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::ConfigParse(format!("`{part}` in `{key}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "schema_version = 1\nscenario = \"junction\"\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c, ExperimentConfig::new("junction"));
        assert_eq!(c.timing.replan_ticks(), 20);
        assert_eq!(c.timing.prediction_ticks(), 50);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = ExperimentConfig::from_toml(&format!("{MINIMAL}[trustmhe]\nt_estimate = 3\n"))
            .unwrap_err();
        assert!(e.to_string().contains("t_estimate"), "{e}");
    }

    #[test]
    fn zero_horizon_names_field() {
        let e =
            ExperimentConfig::from_toml(&format!("{MINIMAL}[trustmhe]\nt_est = 0\n")).unwrap_err();
        assert!(e.to_string().contains("trustmhe.t_est"), "{e}");
    }

    #[test]
    fn overrides_apply_dotted_paths() {
        let c = ExperimentConfig::from_toml_with(
            MINIMAL,
            &[
                "trustmhe.t_est=15".into(),
                "mode=aggressive".into(),
                "seed=42".into(),
                "degradation.onset_s=1.0".into(),
                "degradation.offset_s=2.0".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.trustmhe.t_est, 15);
        assert_eq!(c.mode, PlannerMode::Aggressive);
        assert_eq!(c.seed, 42);
        assert_eq!(c.degradation.unwrap().offset_s, 2.0);
    }

    #[test]
    fn timing_must_be_multiples() {
        let e = ExperimentConfig::from_toml_with(MINIMAL, &["timing.replan_dt=0.0123".into()])
            .unwrap_err();
        assert!(e.to_string().contains("timing.replan_dt"), "{e}");
    }

    #[test]
    fn wrong_schema_version() {
        let e = ExperimentConfig::from_toml("schema_version = 9\nscenario = \"junction\"\n")
            .unwrap_err();
        assert!(e.to_string().contains("schema_version"));
    }

    #[test]
    fn json_and_toml_round_trip() {
        let mut c = ExperimentConfig::new("urban");
        c.degradation = Some(DegradationSchedule {
            onset_s: 1.0,
            offset_s: 5.0,
            sigma_deg: 0.5,
            heading_bias: 0.3,
            shuffle_confidences: true,
        });
        c.seed = 12345;
        assert_eq!(ExperimentConfig::from_json(&c.to_json()).unwrap(), c);
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn custom_scenario_round_trip() {
        let mut c = ExperimentConfig::new(CUSTOM_SCENARIO);
        assert!(c.validate().is_err());
        c.custom_scenario = Some(builtin_scenario("urban").unwrap());
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn overrides_change_scenario() {
        let c =
            ExperimentConfig::from_toml_with(MINIMAL, &["scenario_overrides.duration=12.5".into()])
                .unwrap();
        assert_eq!(c.resolve_scenario().unwrap().duration, 12.5);
    }
}
